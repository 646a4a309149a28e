"""Smoke test for the afdm Python extension.

Build and install first:  pip install -e crates/py --no-build-isolation
"""

import math

import afdm


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    e = afdm.Expression("exp(x1) * sin(t) + x2^2")
    assert close(e(0.5, 2.0, 1.0), math.exp(0.5) * math.sin(1.0) + 4.0, 1e-14)
    g = e.gradient(0.5, 2.0, 1.0)
    assert close(g[0], math.exp(0.5) * math.sin(1.0), 1e-14)
    assert close(g[1], 4.0, 1e-14)
    assert close(g[2], math.exp(0.5) * math.cos(1.0), 1e-14)
    try:
        afdm.Expression("exp(x1 +")
        raise AssertionError("parse error expected")
    except ValueError:
        pass

    grid = afdm.Grid((-0.4, 0.4, 5), (-0.4, 0.4, 5), (0.0, 1.0, 5))
    assert len(grid) == 125
    sol = afdm.assemble_lc(1.0, "exp(x1 + x2 + t)", grid, psi="ln(4) - 2 * ln(1 + x1^2 + x2^2)")
    sup, _ = sol.einstein_residual()
    assert sup < 1e-6, sup
    assert max(sol.lc_conditions().values()) < 1e-8
    assert sol.max_torsion() < 1e-8
    rows = sol.metric_samples()
    assert len(rows) == 125 and len(rows[0]) == len(afdm.Solution.metric_columns)

    tors = afdm.assemble_torsionful(
        1.3, "exp(0.8 * t + 0.3 * x1 - 0.2 * x2)", "x1^2 * x2", "x2", "1.5 + 0.2 * sin(t + x1)",
        afdm.Grid((0.2, 0.8, 4), (0.2, 0.8, 4), (0.1, 0.9, 4)), n1=("0.3 * x2", "x1 * x2"), n2=("1", "0.5"),
    )
    assert max(tors.system_residuals().values()) < 1e-6
    assert tors.max_torsion() > 1e-3

    assert close(afdm.hyp2f1(1.0, 1.0, 2.0, 0.5), -math.log(0.5) / 0.5, 1e-12)
    scan = afdm.lcdm_scan(0.8, 1.3, [0.0, 0.5, 1.0, 1.5], chi=afdm.lcdm_chi_constants())
    assert max(r[5] for r in scan) < 1e-6

    eu = afdm.euler_reconstruct(-1.1)
    assert abs(eu.roots[0][0] - 9.0895) < 1e-3 and abs(eu.roots[1][0] + 0.3117) < 1e-3

    run = afdm.evolve_dedm(-4.0 / 3.0, 1.0, 2.0, 0.5, 5.0, samples=51)
    assert len(run.rows) == 51 and run.columns[0] == "t_or_zeta"
    _, exponent, _ = afdm.big_rip_fit(-4.0 / 3.0, 1.0)
    assert abs(exponent + 1.0) < 1e-2

    _, derived, _, adopted = afdm.fgt_exponents()
    assert adopted in ("printed", "derived") and len(derived) == 3
    ok, margin = afdm.oscillator_criterion(2.0, 0.5, 1.0, 1.0, 2.0, f1=0.3, matter_l=0.25)
    assert isinstance(ok, bool) and math.isfinite(margin)

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
