"""Run specifications: JSON loading, validation and literal parsing."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .auction import AuctionEnv, AuctionMechanism, auction_mechanism
from .errors import ConfigError
from .lps import LPS, Belief, ProfileSpace
from .publicgood import AnonymousPGMechanism, PublicGoodEnv
from .rational import to_rational
from .screening import ScreeningEnv, ScreeningMechanism, efficient_qualities, screening_maximal_transfers

TASKS = (
    "solve_maxmin",
    "solve_leximin",
    "construct",
    "verify",
    "dominance",
    "justify_lps",
    "bayes",
    "bayes_sequence",
    "asymptotics",
)
FORMATS = ("table", "json", "csv")

_ENV_KEYS = {
    "screening": {"kind", "types", "grid", "utility", "cost", "cost_constant"},
    "auction": {"kind", "bidders", "types"},
    "public_good": {"kind", "agents", "theta_low", "theta_high", "gamma"},
}
_PARAM_KEYS = {
    "solve_maxmin": {"anonymous"},
    "solve_leximin": {"anonymous"},
    "construct": {"mechanism"},
    "verify": {"mechanism", "lps", "anonymous"},
    "dominance": {"mechanism", "anonymous"},
    "justify_lps": {"collapse", "anonymous"},
    "bayes": {"prior", "zero_rule"},
    "bayes_sequence": {"lps", "ells", "alternatives", "max_iter", "zero_rule"},
    "asymptotics": {"I_list", "epsilon", "x_grid"},
}
_TOP_KEYS = {"version", "task", "environment", "params", "caps", "output"}
_CAP_KEYS = {"profiles", "lp_variables"}
_OUTPUT_KEYS = {"format", "dir"}

DEFAULT_CAPS = {"profiles": 256, "lp_variables": 5000}


@dataclass
class RunSpec:
    task: str
    env_kind: str
    env: object
    params: dict
    caps: dict = field(default_factory=lambda: dict(DEFAULT_CAPS))
    output_format: str = "table"
    output_dir: str | None = None
    raw: dict = field(default_factory=dict, repr=False)


def _reject_unknown(block: dict, allowed: set, where: str):
    extra = sorted(set(block) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _rat(value, where: str) -> Fraction:
    try:
        return to_rational(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


def _reject_floats(obj, path="spec"):
    if isinstance(obj, float):
        raise ConfigError(f"{path}: float literal {obj!r} rejected; write rationals as \"p/q\"")
    if isinstance(obj, dict):
        for k, v in obj.items():
            _reject_floats(v, f"{path}.{k}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _reject_floats(v, f"{path}[{i}]")


def build_env(block: dict, caps: dict):
    if not isinstance(block, dict) or "kind" not in block:
        raise ConfigError("environment: a 'kind' field is required")
    kind = block["kind"]
    if kind not in _ENV_KEYS:
        raise ConfigError(f"environment.kind: unknown kind {kind!r}")
    _reject_unknown(block, _ENV_KEYS[kind], "environment")
    try:
        if kind == "screening":
            types = [_rat(x, "environment.types") for x in block["types"]]
            grid = [_rat(x, "environment.grid") for x in block["grid"]]
            utility = block.get("utility", "linear")
            cost = block.get("cost", "quadratic")
            if not isinstance(utility, str):
                utility = [[_rat(x, "environment.utility") for x in row] for row in utility]
            if not isinstance(cost, str):
                cost = [_rat(x, "environment.cost") for x in cost]
            env = ScreeningEnv(
                tuple(types), tuple(grid), utility, cost, _rat(block.get("cost_constant", 0), "environment.cost_constant")
            )
            _check_grid_contains_efficient(env)
            return kind, env
        if kind == "auction":
            env = AuctionEnv(
                _int(block["bidders"], "environment.bidders"),
                tuple(_rat(x, "environment.types") for x in block["types"]),
                caps["profiles"],
            )
            return kind, env
        env = PublicGoodEnv(
            _int(block["agents"], "environment.agents"),
            _rat(block["theta_low"], "environment.theta_low"),
            _rat(block["theta_high"], "environment.theta_high"),
            _rat(block["gamma"], "environment.gamma"),
            caps["profiles"],
        )
        return kind, env
    except KeyError as exc:
        raise ConfigError(f"environment: missing field {exc.args[0]!r}") from None
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"environment: {exc}") from None


def _check_grid_contains_efficient(env: ScreeningEnv):
    """The grid argmax must be the unconstrained optimum for the linear-quadratic case."""
    if env.utility == "linear" and env.cost == "quadratic":
        missing = [t for t in env.types if t not in env.grid]
        if missing:
            raise ConfigError(
                "environment.grid: efficient qualities " + ", ".join(str(m) for m in missing) + " are not on the grid"
            )
    efficient_qualities(env)


def load_spec(path, task: str | None = None) -> RunSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_spec(raw, task)


def parse_spec(raw: dict, task: str | None = None) -> RunSpec:
    if not isinstance(raw, dict):
        raise ConfigError("spec must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "spec")
    _reject_floats(raw)
    if raw.get("version", 1) != 1:
        raise ConfigError(f"version: unsupported spec version {raw.get('version')!r}")
    spec_task = raw.get("task")
    if task and spec_task and task != spec_task:
        raise ConfigError(f"task: command line says {task!r} but the spec says {spec_task!r}")
    task = task or spec_task
    if task not in TASKS:
        raise ConfigError(f"task: unknown task {task!r}")

    caps = dict(DEFAULT_CAPS)
    cap_block = raw.get("caps", {})
    _reject_unknown(cap_block, _CAP_KEYS, "caps")
    for k, v in cap_block.items():
        caps[k] = _int(v, f"caps.{k}")

    out = raw.get("output", {})
    _reject_unknown(out, _OUTPUT_KEYS, "output")
    fmt_ = out.get("format", "table")
    if fmt_ not in FORMATS:
        raise ConfigError(f"output.format: unknown format {fmt_!r}")

    kind, env = build_env(raw.get("environment"), caps)
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be an object")
    _reject_unknown(params, _PARAM_KEYS[task], "params")
    if task == "asymptotics" and kind != "public_good":
        raise ConfigError("task asymptotics requires a public_good environment")
    return RunSpec(task, kind, env, params, caps, fmt_, out.get("dir"), raw)


# -- literals ---------------------------------------------------------------------------


def profile_key(kind: str, label) -> str:
    if kind == "screening":
        return str(label)
    return ",".join(str(x) for x in label)


def parse_profile(kind: str, key: str, space: ProfileSpace):
    if kind == "screening":
        label = int(key)
    elif kind == "auction":
        label = tuple(int(x) for x in key.split(","))
    else:
        label = tuple(x.strip() for x in key.split(","))
    if label not in space:
        raise ConfigError(f"unknown profile {key!r}")
    return label


def parse_belief(kind: str, space: ProfileSpace, block) -> Belief:
    if not isinstance(block, dict):
        raise ConfigError("a belief is an object mapping profiles to weights")
    mapping = {parse_profile(kind, k, space): _rat(v, f"belief[{k}]") for k, v in block.items()}
    try:
        return Belief.from_mapping(space, mapping)
    except ValueError as exc:
        raise ConfigError(f"belief: {exc}") from None


def parse_lps(kind: str, space: ProfileSpace, block) -> LPS:
    if not isinstance(block, list) or not block:
        raise ConfigError("lps must be a non-empty list of beliefs")
    return LPS(tuple(parse_belief(kind, space, b) for b in block))


def parse_mechanism(kind: str, env, block):
    if not isinstance(block, dict):
        raise ConfigError("mechanism must be an object")
    try:
        if kind == "screening":
            _reject_unknown(block, {"allocation", "qualities", "transfers"}, "mechanism")
            if "qualities" in block:
                base = ScreeningMechanism.dirac(env, [_rat(q, "mechanism.qualities") for q in block["qualities"]], [0] * env.n_types)
                rows = base.allocation
            else:
                rows = tuple(tuple(_rat(x, "mechanism.allocation") for x in r) for r in block["allocation"])
            if "transfers" in block:
                pays = tuple(_rat(x, "mechanism.transfers") for x in block["transfers"])
            else:
                pays = screening_maximal_transfers(env, rows)
            return ScreeningMechanism(rows, pays)
        if kind == "auction":
            _reject_unknown(block, {"allocation", "transfers"}, "mechanism")
            space = env.space()
            alloc = {parse_profile(kind, k, space): tuple(_rat(x, "mechanism.allocation") for x in v) for k, v in block["allocation"].items()}
            if set(alloc) != set(space.labels):
                raise ConfigError("mechanism.allocation must cover every profile")
            if "transfers" not in block:
                return auction_mechanism(env, alloc)
            pays = {parse_profile(kind, k, space): tuple(_rat(x, "mechanism.transfers") for x in v) for k, v in block["transfers"].items()}
            return AuctionMechanism(alloc, pays)
        _reject_unknown(block, {"Q_by_count", "allocation", "transfers"}, "mechanism")
        if "Q_by_count" in block:
            if "transfers" in block:
                raise ConfigError("mechanism: transfers are implied by Q_by_count")
            return AnonymousPGMechanism(tuple(_rat(x, "mechanism.Q_by_count") for x in block["Q_by_count"]))
        space = env.space()
        rule = {parse_profile(kind, k, space): _rat(v, "mechanism.allocation") for k, v in block["allocation"].items()}
        pays = None
        if "transfers" in block:
            pays = {parse_profile(kind, k, space): tuple(_rat(x, "mechanism.transfers") for x in v) for k, v in block["transfers"].items()}
        return (rule, pays)
    except KeyError as exc:
        raise ConfigError(f"mechanism: missing field {exc.args[0]!r}") from None
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"mechanism: {exc}") from None
