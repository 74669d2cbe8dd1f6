import numpy as np
import pytest

from lpnet.tensor import make_rng


@pytest.fixture
def rng():
    return make_rng(1234)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance-criteria verdict lines after the test summary."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)


def central_diff(fn, arr, idx, eps):
    orig = arr[idx]
    arr[idx] = orig + eps
    fp = fn()
    arr[idx] = orig - eps
    fm = fn()
    arr[idx] = orig
    return (fp - fm) / (2 * eps)


def fd_check_full(fn, arr, grad, eps=1e-5, tol=1e-4):
    """Checks every coordinate of arr against the analytic grad."""
    it = np.nditer(arr, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        fd = central_diff(fn, arr, idx, eps)
        an = grad[idx]
        rel = abs(fd - an) / max(1e-8, abs(fd), abs(an))
        assert rel < tol, f"coord {idx}: fd {fd} vs analytic {an} (rel {rel})"
        it.iternext()


def fd_check_sampled(fn, arrays_and_grads, rng, samples, eps=1e-5, tol=1e-3):
    """Spot-checks random coordinates, skipping ones where the objective is
    locally non-smooth (two step sizes disagreeing flags a ReLU/L1 kink)."""
    flat = list(arrays_and_grads)
    checked = 0
    attempts = 0
    while checked < samples:
        attempts += 1
        assert attempts < 50 * samples, "too many kink coordinates skipped"
        arr, grad = flat[int(rng.integers(len(flat)))]
        idx = tuple(int(rng.integers(s)) for s in arr.shape)
        fd = central_diff(fn, arr, idx, eps)
        fd_small = central_diff(fn, arr, idx, eps / 8)
        scale = max(1e-8, abs(fd), abs(fd_small))
        if abs(fd - fd_small) / scale > 1e-3:
            continue  # crosses a kink at this step size
        an = grad[idx]
        rel = abs(fd_small - an) / max(1e-8, abs(fd_small), abs(an))
        assert rel < tol, f"fd {fd_small} vs analytic {an} (rel {rel})"
        checked += 1
