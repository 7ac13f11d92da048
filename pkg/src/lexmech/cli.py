"""Command-line front end: ``lexmech <task> --spec <file> [--out <dir>] [--format ...]``.

Exit codes: 0 success, 2 bad spec or usage, 3 infeasible or unbounded program,
4 verification failed, 5 size cap exceeded, 6 internal error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

from . import auction as au
from . import publicgood as pg
from . import screening as sc
from .config import TASKS, RunSpec, load_spec, parse_belief, parse_lps, parse_mechanism, profile_key
from .errors import ConfigError, InfeasibleError, PreconditionError, SizeCapError, UnboundedError
from .lps import LPS, Belief, PayoffVector, _mixture, classify_lps, lex_bayes_threshold
from .optimize import dominance_check, leximin_solve, maxmin_solve, mu_optimality_report
from .rational import decimal_str, fmt

SCHEMA = "lexmech-report/1"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_VERIFICATION = 4
EXIT_SIZE_CAP = 5
EXIT_INTERNAL = 6

log = logging.getLogger("lexmech")


@dataclass
class RunReport:
    task: str
    environment: dict
    results: dict
    header: list
    rows: list
    diagnostics: dict = field(default_factory=dict)
    status: int = EXIT_OK
    seconds: float = 0.0

    def as_json(self) -> dict:
        # Timing is left out so identical specs give byte-identical output.
        return {
            "schema": SCHEMA,
            "task": self.task,
            "environment": self.environment,
            "status": self.status,
            "results": self.results,
            "diagnostics": self.diagnostics,
        }


def rjson(q) -> dict:
    q = Fraction(q)
    return {"exact": fmt(q), "decimal": decimal_str(q)}


def _vec(values):
    return [fmt(x) for x in values]


# -- environment adapters ---------------------------------------------------------------


def _polytope(spec: RunSpec, anonymous_default: bool):
    if spec.env_kind == "screening":
        poly = sc.screening_polytope(spec.env)
    elif spec.env_kind == "auction":
        poly = au.auction_polytope(spec.env)
    else:
        anonymous = spec.params.get("anonymous", anonymous_default)
        poly = pg.pub_polytope(spec.env, anonymous=anonymous, per_profile=not anonymous or not anonymous_default)
    n = len(poly.lp.variables)
    if n > spec.caps["lp_variables"]:
        raise SizeCapError(f"{n} LP variables exceed the cap of {spec.caps['lp_variables']}")
    return poly


def _mechanism_json(spec: RunSpec, mech) -> dict:
    kind = spec.env_kind
    if kind == "screening":
        return {"allocation": [_vec(r) for r in mech.allocation], "transfers": _vec(mech.transfers)}
    if kind == "auction":
        return {
            "allocation": {profile_key(kind, p): _vec(mech.allocation[p]) for p in spec.env.profiles()},
            "transfers": {profile_key(kind, p): _vec(mech.transfers[p]) for p in spec.env.profiles()},
        }
    if isinstance(mech, pg.AnonymousPGMechanism):
        return {"Q_by_count": _vec(mech.Q_by_count)}
    rule, pays = mech
    return {
        "allocation": {profile_key(kind, p): fmt(rule[p]) for p in spec.env.profiles()},
        "transfers": {profile_key(kind, p): _vec(pays[p]) for p in spec.env.profiles()},
    }


def _payoffs(spec: RunSpec, mech) -> PayoffVector:
    kind, env = spec.env_kind, spec.env
    if kind == "screening":
        bad = sc.screening_violations(env, mech)
    elif kind == "auction":
        bad = au.auction_violations(env, mech)
    else:
        rule, pays = (mech, None) if isinstance(mech, pg.AnonymousPGMechanism) else mech
        rule = rule.rule() if isinstance(rule, pg.AnonymousPGMechanism) else rule
        try:
            pays = pays or pg.pub_maximal_transfers(env, rule)
        except PreconditionError as exc:
            raise InfeasibleError(str(exc)) from None
        bad = pg._violations(env, rule, pays)
        if not bad:
            return pg.pub_profile_payoffs(env, rule, pays)
    if bad:
        raise InfeasibleError("mechanism violates " + ", ".join(bad[:5]))
    if kind == "screening":
        return sc.screening_payoffs(env, mech)
    return au.auction_payoffs(env, mech)


def _from_assignment(spec: RunSpec, poly, values):
    kind, env = spec.env_kind, spec.env
    if kind == "screening":
        return sc.screening_from_assignment(env, values)
    if kind == "auction":
        return au.auction_from_assignment(env, values)
    names = [v.name for v in poly.lp.variables]
    if names[0].startswith("Q["):
        return pg.AnonymousPGMechanism(tuple(values[: env.agents + 1]))
    profiles = env.profiles()
    rule = {p: values[n] for n, p in enumerate(profiles)}
    base = len(profiles)
    pays = {p: tuple(values[base + n * env.agents : base + (n + 1) * env.agents]) for n, p in enumerate(profiles)}
    return (rule, pays)


def _label_key(spec, label):
    if spec.env_kind == "public_good" and isinstance(label, int):
        return f"count={label}"
    return profile_key(spec.env_kind, label)


def _payoff_rows(spec, pv: PayoffVector):
    return [[_label_key(spec, lab), fmt(v), decimal_str(v)] for lab, v in zip(pv.space.labels, pv.values)]


def _lps_json(spec, lps: LPS):
    return [
        {_label_key(spec, lab): fmt(w) for lab, w in zip(b.space.labels, b.weights) if w} for b in lps.beliefs
    ]


def _closed_form(spec: RunSpec):
    kind, env = spec.env_kind, spec.env
    if kind == "screening":
        return sc.screening_efficient_maximal(env)
    if kind == "auction":
        return au.auction_efficient_maximal_uniform(env)
    return pg.pub_properly_robust(env)


def _default_lps(spec: RunSpec, collapse=False) -> LPS:
    kind, env = spec.env_kind, spec.env
    if kind == "screening":
        space = env.space()
        return LPS(tuple(Belief.point(space, lab) for lab in space.labels))
    if kind == "auction":
        return au.auction_proper_lps(env, collapse=collapse)
    return pg.pub_justifying_lps(env)


# -- tasks ----------------------------------------------------------------------------


def _task_solve_maxmin(spec):
    poly = _polytope(spec, True)
    value, x = maxmin_solve(poly)
    mech = _from_assignment(spec, poly, x)
    pv = poly.evaluate(x)
    results = {"value": rjson(value), "mechanism": _mechanism_json(spec, mech), "payoffs": _payoff_map(spec, pv)}
    return results, ["profile", "payoff_exact", "payoff_decimal"], _payoff_rows(spec, pv), {}


def _payoff_map(spec, pv):
    return {_label_key(spec, lab): rjson(v) for lab, v in zip(pv.space.labels, pv.values)}


def _task_solve_leximin(spec):
    poly = _polytope(spec, True)
    res = leximin_solve(poly)
    mech = _from_assignment(spec, poly, res.mechanism)
    levels = [
        {"value": rjson(v), "profiles": [_label_key(spec, lab) for lab in s]}
        for v, s in zip(res.level_values, res.level_sets)
    ]
    rows = [
        [str(i + 1), fmt(v), decimal_str(v), " ".join(_label_key(spec, lab) for lab in s)]
        for i, (v, s) in enumerate(zip(res.level_values, res.level_sets))
    ]
    diagnostics = {}
    closed = _closed_form(spec)
    if spec.env_kind == "public_good" and isinstance(mech, pg.AnonymousPGMechanism):
        diagnostics["matches_closed_form"] = mech.Q_by_count == closed.Q_by_count
    elif spec.env_kind == "screening":
        diagnostics["matches_closed_form"] = mech == closed
    else:
        target = sorted(_payoffs(spec, closed).values)
        diagnostics["matches_benchmark_order_statistics"] = sorted(res.payoffs.values) == target
    results = {"levels": levels, "mechanism": _mechanism_json(spec, mech), "payoffs": _payoff_map(spec, res.payoffs)}
    return results, ["level", "value_exact", "value_decimal", "profiles"], rows, diagnostics


def _task_construct(spec):
    kind, env = spec.env_kind, spec.env
    mech = _closed_form(spec)
    if "mechanism" in spec.params:
        mech = parse_mechanism(kind, env, spec.params["mechanism"])
    pv = _payoffs(spec, mech)
    diagnostics = {}
    if kind == "screening":
        diagnostics["robust"] = sc.screening_check_robust(env, mech).conditions
        q = mech.qualities(env)
        extra = {"qualities": _vec(q) if q else None, "prices": _vec(mech.transfers)}
    elif kind == "auction":
        diagnostics["robust"] = au.auction_check_robust(env, mech).conditions
        diagnostics["proper_structure"] = au.auction_check_proper_structure(env, mech).conditions
        extra = {}
    else:
        rule, pays = mech if isinstance(mech, tuple) else (mech, None)
        rep = pg.pub_check_robust(env, rule, pays)
        diagnostics["robust"] = rep.ok
        diagnostics["efficient_maximal_robust"] = pg.pub_check_efficient_maximal_robust(env).conditions
        pr = pg.pub_primitives(env)
        extra = {"surplus": _vec(pr.surplus), "k_star": pr.k_star, "rho": rjson(pr.rho)}
    results = {"mechanism": _mechanism_json(spec, mech), "payoffs": _payoff_map(spec, pv), **extra}
    return results, ["profile", "payoff_exact", "payoff_decimal"], _payoff_rows(spec, pv), _jsonable(diagnostics)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, Fraction):
        return rjson(obj)
    return obj


def _verify_common(spec, mech, lps):
    poly = _polytope(spec, False)
    pv = _payoffs(spec, mech)
    report = mu_optimality_report(pv, poly, lps)
    flags = classify_lps(lps, pv)
    rows = []
    for k, target in enumerate(report.candidate_levels):
        best = report.best_levels[k] if k < len(report.best_levels) else None
        rows.append([str(k + 1), fmt(target), "" if best is None else fmt(best)])
    results = {
        "mu_optimal": report.ok,
        "failed_level": report.level,
        "reason": report.reason,
        "classification": {
            "full_support": flags.full_support,
            "adversarial": flags.adversarial,
            "strongly_adversarial": flags.strongly_adversarial,
        },
        "candidate_levels": [rjson(v) for v in report.candidate_levels],
        "best_levels": [rjson(v) for v in report.best_levels],
    }
    return results, ["level", "candidate_exact", "best_exact"], rows, report.ok


def _task_verify(spec):
    if "mechanism" not in spec.params or "lps" not in spec.params:
        raise ConfigError("verify needs params.mechanism and params.lps")
    mech = parse_mechanism(spec.env_kind, spec.env, spec.params["mechanism"])
    space = _space(spec)
    lps = parse_lps(spec.env_kind, space, spec.params["lps"])
    results, header, rows, ok = _verify_common(spec, mech, lps)
    return results, header, rows, {}, (EXIT_OK if ok else EXIT_VERIFICATION)


def _space(spec):
    return spec.env.space()


def _task_dominance(spec):
    mech = _closed_form(spec)
    if "mechanism" in spec.params:
        mech = parse_mechanism(spec.env_kind, spec.env, spec.params["mechanism"])
    poly = _polytope(spec, False)
    pv = _payoffs(spec, mech)
    res = dominance_check(pv, poly)
    results = {"admissible": res.admissible, "vacuous": res.vacuous}
    rows = [[_label_key(spec, lab), fmt(v), ""] for lab, v in zip(pv.space.labels, pv.values)]
    if res.witness is not None:
        wp = poly.evaluate(res.witness)
        results["total_slack"] = rjson(res.total_slack)
        results["witness"] = _mechanism_json(spec, _from_assignment(spec, poly, res.witness))
        results["witness_payoffs"] = _payoff_map(spec, wp)
        rows = [[r[0], r[1], fmt(w)] for r, w in zip(rows, wp.values)]
    return results, ["profile", "candidate_exact", "witness_exact"], rows, {}


def _task_justify_lps(spec):
    lps = _default_lps(spec, collapse=bool(spec.params.get("collapse", False)))
    mech = _closed_form(spec)
    results, header, rows, ok = _verify_common(spec, mech, lps)
    results = {"lps": _lps_json(spec, lps), "mechanism": _mechanism_json(spec, mech), **results}
    flags = results["classification"]
    ok = ok and all(flags.values())
    return results, header, rows, {}, (EXIT_OK if ok else EXIT_VERIFICATION)


def _bayes(spec, prior: Belief):
    zero_rule = spec.params.get("zero_rule", "withhold")
    if spec.env_kind == "screening":
        return sc.screening_bayesian_optimal(spec.env, prior)
    if spec.env_kind == "auction":
        return au.auction_bayesian_optimal(spec.env, prior, zero_rule)
    raise ConfigError("Bayesian tasks support screening and auction environments")


def _task_bayes(spec):
    if "prior" not in spec.params:
        raise ConfigError("bayes needs params.prior")
    prior = parse_belief(spec.env_kind, _space(spec), spec.params["prior"])
    mech = _bayes(spec, prior)
    pv = _payoffs(spec, mech)
    closed = _payoffs(spec, _closed_form(spec))
    results = {
        "mechanism": _mechanism_json(spec, mech),
        "payoffs": _payoff_map(spec, pv),
        "expected_payoff": rjson(sum(w * v for w, v in zip(prior.weights, pv.values))),
        "equals_efficient_maximal": pv == closed,
    }
    return results, ["profile", "payoff_exact", "payoff_decimal"], _payoff_rows(spec, pv), {}


def _task_bayes_sequence(spec):
    space = _space(spec)
    if spec.env_kind == "public_good":
        raise ConfigError("Bayesian tasks support screening and auction environments")
    lps = parse_lps(spec.env_kind, space, spec.params["lps"]) if "lps" in spec.params else _default_lps(spec, True)
    ells = spec.params.get("ells", [1, 2, 5, 10, 100])
    K = len(lps)

    def r_seq(ell):
        return tuple(Fraction(1, ell) for _ in range(K - 1))

    closed_mech = _closed_form(spec)
    closed = _payoffs(spec, closed_mech)
    seq, rows = [], []
    for ell in ells:
        prior = _mixture(lps, r_seq(ell), closed_top=True)
        pv = _payoffs(spec, _bayes(spec, prior))
        eq = pv == closed
        seq.append({"ell": ell, "equals_efficient_maximal": eq, "payoffs": _payoff_map(spec, pv)})
        rows.append([str(ell), str(eq).lower(), fmt(sum(w * v for w, v in zip(prior.weights, pv.values)))])
    thresholds = []
    max_iter = spec.params.get("max_iter", 1000)
    for n, alt in enumerate(spec.params.get("alternatives", [])):
        alt_pv = _payoffs(spec, parse_mechanism(spec.env_kind, spec.env, alt))
        try:
            L = lex_bayes_threshold(lps, closed, alt_pv, r_seq, max_iter)
            thresholds.append({"alternative": n, "L": L})
        except PreconditionError as exc:
            thresholds.append({"alternative": n, "L": None, "error": str(exc)})
    results = {"lps": _lps_json(spec, lps), "sequence": seq, "thresholds": thresholds}
    return results, ["ell", "equals_efficient_maximal", "expected_payoff"], rows, {}


def _task_asymptotics(spec):
    env = spec.env
    p = spec.params
    I_list = p.get("I_list", [env.agents])
    eps = p.get("epsilon", "1/10")
    rep = pg.pub_asymptotics(env.theta_low, env.theta_high, env.gamma, I_list, eps, p.get("x_grid"))
    rows = [[str(r.I), str(r.k), fmt(r.fraction), fmt(r.Q), decimal_str(r.Q)] for r in rep.rows]
    results = {
        "rows": [
            {"I": r.I, "k": r.k, "fraction": rjson(r.fraction), "Q": rjson(r.Q)} for r in rep.rows
        ],
        "curve": [{"I": I, "x": rjson(x), "f": rjson(f)} for I, x, f in rep.curve],
        "bound_checks": [
            {"I": c["I"], "K": c["K"], "sup": rjson(c["sup"]), "bound": rjson(c["bound"]), "holds": c["holds"]}
            for c in rep.bound_checks
        ],
    }
    status = EXIT_OK if rep.ok else EXIT_VERIFICATION
    return results, ["I", "k", "fraction", "Q_exact", "Q_decimal"], rows, {}, status


_DISPATCH = {
    "solve_maxmin": _task_solve_maxmin,
    "solve_leximin": _task_solve_leximin,
    "construct": _task_construct,
    "verify": _task_verify,
    "dominance": _task_dominance,
    "justify_lps": _task_justify_lps,
    "bayes": _task_bayes,
    "bayes_sequence": _task_bayes_sequence,
    "asymptotics": _task_asymptotics,
}


def run(spec: RunSpec) -> RunReport:
    start = time.perf_counter()
    out = _DISPATCH[spec.task](spec)
    status = out[4] if len(out) == 5 else EXIT_OK
    results, header, rows, diagnostics = out[:4]
    return RunReport(
        spec.task,
        spec.raw.get("environment", {}),
        results,
        header,
        rows,
        diagnostics,
        status,
        time.perf_counter() - start,
    )


def emit(report: RunReport, fmt_: str, out_dir: str | None = None, stream=None) -> str:
    if fmt_ == "json":
        text = json.dumps(report.as_json(), indent=2) + "\n"
        ext = "json"
    elif fmt_ == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(report.header)
        w.writerows(report.rows)
        text = buf.getvalue()
        ext = "csv"
    else:
        text = _table(report)
        ext = "txt"
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, f"{report.task}.{ext}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        (stream or sys.stdout).write(text)
    return text


def _table(report: RunReport) -> str:
    widths = [len(h) for h in report.header]
    for row in report.rows:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]
    lines = [f"task: {report.task}  status: {report.status}"]
    for key, value in report.results.items():
        if isinstance(value, (bool, int)) or value is None:
            lines.append(f"{key}: {json.dumps(value)}")
        elif isinstance(value, str):
            lines.append(f"{key}: {value}")
        elif isinstance(value, dict) and set(value) == {"exact", "decimal"}:
            lines.append(f"{key}: {value['exact']} ({value['decimal']})")
    lines.append("  ".join(h.ljust(w) for h, w in zip(report.header, widths)))
    for row in report.rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    for key, value in report.diagnostics.items():
        lines.append(f"{key}: {json.dumps(value)}")
    return "\n".join(line.rstrip() for line in lines) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lexmech", description="Lexicographic robust mechanism design toolkit")
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--spec", required=True, help="JSON run specification")
    parser.add_argument("--out", default=None, help="directory for output files (default: stdout)")
    parser.add_argument("--format", choices=("table", "json", "csv"), default=None)
    args = parser.parse_args(argv)
    logging.basicConfig(level=os.environ.get("LEXMECH_LOG", "WARNING").upper(), format="%(levelname)s %(message)s")
    try:
        spec = load_spec(args.spec, args.task)
        report = run(spec)
        emit(report, args.format or spec.output_format, args.out or spec.output_dir)
        return report.status
    except ConfigError as exc:
        print(f"lexmech: spec error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleError, UnboundedError) as exc:
        print(f"lexmech: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SizeCapError as exc:
        print(f"lexmech: size cap: {exc}", file=sys.stderr)
        return EXIT_SIZE_CAP
    except PreconditionError as exc:
        print(f"lexmech: precondition failed: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    except Exception as exc:  # noqa: BLE001 - last-resort guard for the exit-code contract
        log.debug("internal error", exc_info=True)
        print(f"lexmech: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
