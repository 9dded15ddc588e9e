"""Independent reference routines used only by the test-suite."""
import numpy as np

from comfortloop.comfort import clothing_balance_residual


def bisect_tcl(sample, occupant, lo=0.0, hi=60.0, iterations=200):
    """Bracketing root of the clothing heat balance; no derivatives."""
    f_lo = clothing_balance_residual(lo, sample, occupant)
    f_hi = clothing_balance_residual(hi, sample, occupant)
    assert f_lo * f_hi < 0, "root not bracketed"
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        f_mid = clothing_balance_residual(mid, sample, occupant)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return 0.5 * (lo + hi)


def finite_difference_grad(loss_fn, params, step=1e-5):
    """Central differences of ``loss_fn()`` w.r.t. every entry of every array
    in ``params`` (perturbed in place and restored)."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + step
            up = loss_fn()
            p[idx] = orig - step
            down = loss_fn()
            p[idx] = orig
            g[idx] = (up - down) / (2 * step)
        grads.append(g)
    return grads


def relative_error(a, b, floor=1e-12):
    """Elementwise |a-b| / max(|a|, |b|); entries where both are below
    ``floor`` count as exact agreement."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.abs(a), np.abs(b))
    err = np.abs(a - b) / np.where(scale < floor, 1.0, scale)
    return np.where(scale < floor, 0.0, err)
