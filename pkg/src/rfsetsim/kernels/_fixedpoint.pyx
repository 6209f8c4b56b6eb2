# cython: language_level=3, boundscheck=False, cdivision=True
"""Compiled fixed-point solver for the nonlinear resonator operating point.

Same algorithm as _fixedpoint_py.solve_operating_point; kept in lockstep and
cross-checked by the test suite.
"""


def solve_operating_point(double omega, double v_src, double z0,
                          double cc, double c, double cp,
                          double r_contact, double r_shunt,
                          double lk_linear, double i_dc, double i_star,
                          double i_sw, double i_rf_init,
                          double damping, double rel_tol, int max_iter):
    cdef double complex zl, ytank, ztank, zin, i_line, v_b, jomega
    cdef double i_rf, i_new, i_next, lk, lk_next, rel, s
    cdef int it

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
