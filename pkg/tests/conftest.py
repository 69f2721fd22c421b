import pytest

from singletprep.optimize import min_time_search


@pytest.fixture(scope="session")
def critical_times():
    """Minimum-time search result shared by the robustness and acceptance
    tests (the analyses take the critical durations as inputs)."""
    return min_time_search()
