"""Quick check that the extension imports and returns sane numbers."""

import math

import curvewave_py as cw


def main():
    j = cw.bessel_j(1, 1.0 + 0j)
    assert abs(j - 0.44005058574493352) < 1e-13, j
    h = cw.hankel1(0, 1.0 + 0j)
    assert abs(h - complex(0.76519768655796655, 0.088256964215676958)) < 1e-12, h
    assert abs(cw.bessel_k(0, 1.0) - 0.42102443824070833) < 1e-13

    bound = cw.bound_modes(0)
    assert bound[0][:2] == (0, 1) and bound[0][3] == "bound"
    assert abs(bound[0][2].real - 1.1964304775615891) < 1e-10

    res = cw.resonances(120, 112.0, 114.0)
    k = next(r[2] for r in res if abs(r[2].real - 113.0) < 0.5)
    assert abs(k.real - 112.998588974163) < 1e-8 and k.imag < 0, k

    e, v0 = 1200.0, 5000.0
    step = 1e-3
    slope = (cw.step_phase(e + step, v0) - cw.step_phase(e - step, v0)) / (2 * step)
    assert math.isclose(cw.wigner_delay(e, v0), slope, rel_tol=1e-6)

    l_gh, delay = cw.gh_theory(75.0, 75.0)
    assert abs(l_gh - 0.0152) < 2e-4 and abs(delay - 0.0304) < 0.02 * 0.0304

    try:
        cw.wigner_delay(6000.0, v0)
    except ValueError:
        pass
    else:
        raise AssertionError("energy above the step must raise ValueError")

    print(f"smoke ok: J1(1)={j.real:.12f} k_res={k} l_gh={l_gh:.5f}")


if __name__ == "__main__":
    main()
