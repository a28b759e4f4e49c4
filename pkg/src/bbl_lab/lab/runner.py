"""Execute scenarios and collect verification reports."""

from __future__ import annotations

import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Sequence

from .. import distance, means, pconcave, torsion
from ..pconcave import Check
from ..polytope2d import minkowski_comb
from .scenario import Scenario, scenario_from_dict

SCHEMA = 1
BM_SLACK = 1e-9


def tool_version() -> str:
    from .. import __version__

    return __version__


@dataclass(frozen=True)
class VerificationReport:
    """Deterministic record ``data`` plus the wall time, which is kept out of it.

    FEM kinds also carry ``field_dump``, the text dump of the solution on the
    coarse mesh of the combined body (or of the body, for ``urysohn``), which
    the SVG emitter plots; it is not part of the JSON report.
    """

    data: dict[str, Any]
    wall_time: float = 0.0
    field_dump: str | None = None

    @property
    def name(self) -> str:
        return self.data["name"]

    @property
    def kind(self) -> str:
        return self.data["kind"]

    @property
    def passed(self) -> bool:
        return bool(self.data["passed"])

    @property
    def checks(self) -> dict[str, dict[str, Any]]:
        return self.data.get("checks", {})


def _bm_check(lhs: float, rhs: float) -> Check:
    return Check(lhs, rhs, BM_SLACK * max(1.0, abs(lhs)))


def _tau_dict(t: torsion.TauEstimate) -> dict[str, float]:
    return {"value": t.value, "richardson": t.richardson, "err_est": t.err_est}


def _run_bm(s: Scenario):
    K0, K1 = s.bodies
    r = distance.verify_bm(K0, K1, s.lam, slack=BM_SLACK, seed=s.seed)
    n = 2
    q = {
        "area0": K0.area,
        "area1": K1.area,
        "area_lambda": r.area_lambda,
        "mean_area": r.mean_area,
        "deficit": r.area_lambda - r.mean_area,
        "h0": r.h0,
        "asym": r.asymmetry,
        "omega": r.omega,
        "fmp_coefficient": r.fmp_coefficient,
    }
    checks = {
        "bm": _bm_check(r.bm_lhs, r.bm_rhs),
        "groemer": _bm_check(r.area_lambda, r.groemer_rhs),
        "fmp": _bm_check(r.area_lambda, r.fmp_rhs),
    }
    bounds = {
        "h0": {"coef": r.mean_area * r.omega, "exp": n + 1.0},
        "asym": {"coef": r.mean_area * r.fmp_coefficient, "exp": 2.0},
    }
    geometry = {"omega0": K0, "omega1": K1, "omega_lambda": minkowski_comb(K0, K1, s.lam)}
    return q, checks, bounds, {}, geometry


def _stability_as_check(st: pconcave.StabilityCheck) -> Check:
    # |Omega_lam| <= bound + slack, written as bound >= |Omega_lam| - slack
    return Check(st.bound_rhs, st.area_lambda, 1e-9, st.applicable)


def _run_bbl(s: Scenario):
    u0, u1 = s.functions
    r = pconcave.verify_bbl(u0, u1, s.p, s.lam, s.quad_tol, s.seed)
    c = r.constants
    e_h = 3.0 * (s.p + 1.0) / s.p
    e_a = 2.0 * (s.p + 1.0) / s.p
    q = {
        "p": s.p,
        "I0": r.I0,
        "I1": r.I1,
        "I_lambda": r.I_lambda,
        "mean_rhs": r.mean_rhs,
        "epsilon": r.epsilon,
        "deficit": r.epsilon,
        "error_budget": r.error_budget,
        "h0": r.h0,
        "asym": r.asym,
        "area0": r.area0,
        "area1": r.area1,
        "area_lambda": r.area_lambda,
        "epsilon_eff": r.stability.epsilon_eff,
        "eta": r.stability.eta,
        "mean_area": r.stability.mean_area,
    }
    checks = dict(r.checks)
    checks["stability"] = _stability_as_check(r.stability)
    bounds = {"h0": {"coef": c.beta, "exp": e_h}, "asym": {"coef": c.delta, "exp": e_a}}
    D0, D1 = u0.domain, u1.domain
    geometry = {"omega0": D0, "omega1": D1, "omega_lambda": minkowski_comb(D0, D1, s.lam)}
    return q, checks, bounds, c.to_dict(), geometry


def _run_stability(s: Scenario):
    u0, u1 = s.functions
    st = pconcave.verify_stability(u0, u1, s.p, s.lam, s.quad_tol)
    D0, D1 = u0.domain, u1.domain
    q = {
        "p": s.p,
        "epsilon": st.epsilon,
        "epsilon_eff": st.epsilon_eff,
        "area0": D0.area,
        "area1": D1.area,
        "area_lambda": st.area_lambda,
        "mean_area": st.mean_area,
        "eta": st.eta,
        "b_threshold": st.b_threshold,
        "bound_rhs": st.bound_rhs,
    }
    geometry = {"omega0": D0, "omega1": D1, "omega_lambda": minkowski_comb(D0, D1, s.lam)}
    return q, {"stability": _stability_as_check(st)}, {}, {}, geometry


def _quantitative_bounds(p: float, c: means.ConstantsBundle) -> dict[str, Any]:
    return {
        "h0": {"coef": c.beta, "exp": 3.0 * (p + 1.0) / p},
        "asym": {"coef": c.delta, "exp": 2.0 * (p + 1.0) / p},
    }


def _run_bm_tau(s: Scenario):
    K0, K1 = s.bodies
    r = torsion.verify_bm_tau(K0, K1, s.lam, s.mesh_h, s.seed)
    q = {
        "tau0": r.tau0.richardson,
        "tau1": r.tau1.richardson,
        "tau_lambda": r.tau_lambda.richardson,
        "mean_rhs": r.mean_rhs,
        "deficit": r.tau_lambda.richardson - r.mean_rhs,
        "fem_slack": r.slack,
        "h0": r.h0,
        "asym": r.asym,
        "area0": K0.area,
        "area1": K1.area,
        "area_lambda": minkowski_comb(K0, K1, s.lam).area,
        "tau0_mesh": _tau_dict(r.tau0),
        "tau1_mesh": _tau_dict(r.tau1),
        "tau_lambda_mesh": _tau_dict(r.tau_lambda),
    }
    geometry = {"omega0": K0, "omega1": K1, "omega_lambda": minkowski_comb(K0, K1, s.lam)}
    return q, r.checks, _quantitative_bounds(0.5, r.constants), r.constants.to_dict(), geometry


def _run_urysohn(s: Scenario):
    (K,) = s.bodies
    r = torsion.verify_urysohn(K, s.mesh_h, s.angle_count, s.seed)
    q = {
        "tau": r.tau.richardson,
        "tau_sharp": r.tau_sharp,
        "radius": r.radius,
        "hausdorff": r.hausdorff,
        "asym": r.asym,
        "mu": r.mu,
        "nu": r.nu,
        "fem_slack": r.slack,
        "area0": K.area,
        "tau_mesh": _tau_dict(r.tau),
    }
    geometry = {"omega0": K, "omega_sharp": torsion.omega_sharp(K)}
    return q, r.checks, {}, {"mu": r.mu, "nu": r.nu}, geometry


def _run_poisson_bbl(s: Scenario):
    K0, K1 = s.bodies
    r = torsion.verify_poisson_bbl(K0, K1, s.lam, s.f_pieces, s.beta_exp, s.mesh_h, s.seed)
    q = {
        "p": r.p,
        "I0": r.I0.richardson,
        "I1": r.I1.richardson,
        "I_lambda": r.I_lambda.richardson,
        "mean_rhs": r.mean_rhs,
        "deficit": r.I_lambda.richardson - r.mean_rhs,
        "fem_slack": r.slack,
        "h0": r.h0,
        "asym": r.asym,
        "area0": K0.area,
        "area1": K1.area,
        "area_lambda": minkowski_comb(K0, K1, s.lam).area,
        "I0_mesh": _tau_dict(r.I0),
        "I1_mesh": _tau_dict(r.I1),
        "I_lambda_mesh": _tau_dict(r.I_lambda),
    }
    geometry = {"omega0": K0, "omega1": K1, "omega_lambda": minkowski_comb(K0, K1, s.lam)}
    return q, r.checks, _quantitative_bounds(r.p, r.constants), r.constants.to_dict(), geometry


def _field_dump(s: Scenario) -> str | None:
    if s.kind == "urysohn":
        K, f = s.bodies[0], torsion.constant_source(2.0)
    elif s.kind == "bm_tau":
        K, f = minkowski_comb(*s.bodies, s.lam), torsion.constant_source(2.0)
    elif s.kind == "poisson_bbl":
        K, f = minkowski_comb(*s.bodies, s.lam), torsion.beta_concave_source(s.f_pieces, s.beta_exp)
    else:
        return None
    buf = io.StringIO()
    torsion.dump_field(torsion.solve_poisson(K, f, s.mesh_h), buf)
    return buf.getvalue()


RUNNERS = {
    "bm": _run_bm,
    "bbl": _run_bbl,
    "stability": _run_stability,
    "bm_tau": _run_bm_tau,
    "urysohn": _run_urysohn,
    "poisson_bbl": _run_poisson_bbl,
}


def run_scenario(s: Scenario) -> VerificationReport:
    """Run one scenario; failures are recorded in the report instead of raised."""
    t0 = time.perf_counter()
    data: dict[str, Any] = {
        "name": s.name,
        "kind": s.kind,
        "seed": s.seed,
        "tool_version": tool_version(),
        "scenario": s.to_dict(),
    }
    dump = None
    try:
        q, checks, bounds, consts, geometry = RUNNERS[s.kind](s)
        dump = _field_dump(s)
    except Exception as exc:  # recorded, never raised out of a suite
        data.update(
            status="error",
            error=f"{type(exc).__name__}: {exc}",
            passed=False,
            quantities={},
            constants={},
            bounds={},
            checks={},
            geometry={},
        )
    else:
        data.update(
            status="ok",
            error=None,
            passed=all(c.ok for c in checks.values()),
            quantities=q,
            constants=consts,
            bounds=bounds,
            checks={k: c.to_dict() for k, c in checks.items()},
            geometry={k: K.to_list() for k, K in geometry.items()},
        )
    return VerificationReport(data, time.perf_counter() - t0, dump)


def _run_dict(raw: dict[str, Any]) -> VerificationReport:
    return run_scenario(scenario_from_dict(raw))


def default_jobs() -> int:
    raw = os.environ.get("BBL_LAB_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"BBL_LAB_JOBS must be an integer, got {raw!r}") from None


def run_suite(scenarios: Sequence[Scenario], jobs: int | None = None) -> list[VerificationReport]:
    """Run every scenario; the output order is the input order for any ``jobs``."""
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    if jobs == 1 or len(scenarios) <= 1:
        return [run_scenario(s) for s in scenarios]
    # scenarios travel as plain dicts and are re-validated in the worker
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_dict, [s.to_dict() for s in scenarios]))


def _same(a: float, b: float) -> bool:
    return a == b or (math.isnan(a) and math.isnan(b))


def audit(data: dict[str, Any]) -> list[str]:
    """Recompute every flag from the recorded scalars; returns the mismatches.

    Accepts both live reports and re-parsed JSON (non-finite values as strings).
    """
    bad = []
    all_ok = True
    for name, c in data.get("checks", {}).items():
        lhs, rhs, slack = float(c["lhs"]), float(c["rhs"]), float(c["slack"])
        holds = lhs >= rhs - slack
        expect = holds if c["applicable"] else None
        if c["holds"] != expect:
            bad.append(f"{name}: recorded holds={c['holds']}, recomputed {expect}")
        if not _same(float(c["margin"]), lhs - rhs):
            bad.append(f"{name}: margin does not equal lhs - rhs")
        all_ok = all_ok and (not c["applicable"] or holds)
    if data.get("status") == "ok" and data.get("passed") != all_ok:
        bad.append(f"passed={data.get('passed')}, recomputed {all_ok}")
    return bad
