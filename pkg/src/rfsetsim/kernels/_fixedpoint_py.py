"""Pure-Python fixed-point solver for the nonlinear resonator operating point.

Mirrors the compiled kernel in _fixedpoint.pyx operation for operation; the
two implementations are cross-checked in the test suite. All quantities are
SI scalars.
"""

from __future__ import annotations


def solve_operating_point(omega: float, v_src: float, z0: float,
                          cc: float, c: float, cp: float,
                          r_contact: float, r_shunt: float,
                          lk_linear: float, i_dc: float, i_star: float,
                          i_sw: float, i_rf_init: float,
                          damping: float, rel_tol: float, max_iter: int):
    """Damped fixed-point iteration for the self-consistent inductor current.

    Returns (lk_H, i_rf_A, switched, converged, iterations). ``switched``
    means the peak current |I_dc| + I_rf exceeded the switching current and
    the film must be treated as normal; the returned i_rf is the iterate that
    crossed the threshold.
    """
    if abs(i_dc) > i_sw:
        return lk_linear, 0.0, True, True, 0

    i_rf = i_rf_init if i_rf_init > 0.0 else 0.0
    s = (i_dc + i_rf) / i_star
    lk = lk_linear * (1.0 + s * s)
    jomega = 1j * omega

    for it in range(1, max_iter + 1):
        zl = r_contact + jomega * lk
        ytank = jomega * (c + cp) + 1.0 / zl + 1.0 / r_shunt
        ztank = 1.0 / ytank
        zin = 1.0 / (jomega * cc) + ztank
        i_line = v_src / (z0 + zin)
        v_b = i_line * ztank
        i_new = abs(v_b / zl)

        i_next = i_rf + damping * (i_new - i_rf)
        if abs(i_dc) + i_next > i_sw:
            return lk, i_next, True, True, it

        s = (i_dc + i_next) / i_star
        lk_next = lk_linear * (1.0 + s * s)
        rel = abs(lk_next - lk) / lk
        i_rf = i_next
        lk = lk_next
        if rel < rel_tol:
            return lk, i_rf, False, True, it

    return lk, i_rf, False, False, max_iter
