"""Small adaptive Cash-Karp 5(4) stepper for scalar Prüfer-type systems.

Pure-Python on purpose: the angle equations have 1-4 components and are
integrated inside root brackets, where per-call overhead of a general ODE
framework dominates.  Error control is per unit length, so a requested
``eps_per_length`` bounds the accumulated local error over the interval.
"""

from __future__ import annotations

from .errors import ConvergenceError

# Cash-Karp tableau
_C2, _C3, _C4, _C5, _C6 = 0.2, 0.3, 0.6, 1.0, 0.875
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 0.3, -0.9, 1.2
_A51, _A52, _A53, _A54 = -11.0 / 54.0, 2.5, -70.0 / 27.0, 35.0 / 27.0
_A61, _A62, _A63, _A64, _A65 = (1631.0 / 55296.0, 175.0 / 512.0, 575.0 / 13824.0,
                                44275.0 / 110592.0, 253.0 / 4096.0)
_B1, _B3, _B4, _B6 = 37.0 / 378.0, 250.0 / 621.0, 125.0 / 594.0, 512.0 / 1771.0
_E1 = _B1 - 2825.0 / 27648.0
_E3 = _B3 - 18575.0 / 48384.0
_E4 = _B4 - 13525.0 / 55296.0
_E5 = -277.0 / 14336.0
_E6 = _B6 - 0.25

_MAX_STEPS = 5_000_000


def integrate(rhs, x0: float, y0, x1: float, eps_per_length: float = 1e-11,
              max_step: float = 0.05, record=True):
    """Integrate y' = rhs(x, y) from x0 to x1 (x0 < x1).

    ``y0`` is a tuple of floats.  Returns (xs, ys): accepted step abscissae
    and state tuples; with ``record=False`` only the final point is kept.
    """
    if not x1 > x0:
        raise ValueError("need x0 < x1")
    m = len(y0)
    rng = range(m)
    x = x0
    y = tuple(y0)
    xs = [x]
    ys = [y]
    h = min(max_step, (x1 - x0) / 50.0, 0.01)
    steps = 0
    while x < x1:
        if x + h > x1:
            h = x1 - x
        k1 = rhs(x, y)
        k2 = rhs(x + _C2 * h, tuple(y[i] + h * _A21 * k1[i] for i in rng))
        k3 = rhs(x + _C3 * h, tuple(y[i] + h * (_A31 * k1[i] + _A32 * k2[i]) for i in rng))
        k4 = rhs(x + _C4 * h, tuple(y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
                                    for i in rng))
        k5 = rhs(x + _C5 * h, tuple(y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i]
                                                + _A54 * k4[i]) for i in rng))
        k6 = rhs(x + _C6 * h, tuple(y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                                + _A64 * k4[i] + _A65 * k5[i]) for i in rng))
        err = 0.0
        y_new = []
        for i in rng:
            yi = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B6 * k6[i])
            ei = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i])
            scale = 1.0 if -1.0 < yi < 1.0 else abs(yi)
            r = abs(ei) / scale
            if r > err:
                err = r
            y_new.append(yi)
        tol = eps_per_length * h
        if err <= tol or h <= 1e-13 * (abs(x) + 1.0):
            if h <= 1e-13 * (abs(x) + 1.0) and err > tol:
                raise ConvergenceError(f"step size collapsed near x = {x:.6g}")
            x = x + h
            y = tuple(y_new)
            if record:
                xs.append(x)
                ys.append(y)
            if err > 0.0:
                h = h * min(5.0, max(0.2, 0.9 * (tol / err) ** 0.2))
            else:
                h = h * 5.0
            h = min(h, max_step)
        else:
            h = h * max(0.2, 0.9 * (tol / err) ** 0.2)
        steps += 1
        if steps > _MAX_STEPS:
            raise ConvergenceError(f"step budget exhausted near x = {x:.6g}")
    if not record:
        xs.append(x)
        ys.append(y)
    return xs, ys
