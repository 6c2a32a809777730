"""Experiment definitions E1-E6, configuration loading and result emission.

A config file is flat ``key=value`` text whose keys override the
per-model presets below. Every emitted file starts with the resolved
configuration as ``# key=value`` lines so outputs are self-describing.
"""

from __future__ import annotations

import math
import os
import shutil
import statistics
import tempfile
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Iterable

from scipy import stats

from . import analytics
from .errors import ConfigError, IoError
from .netsim import LinkModel, World
from .protocol import Delivery, Scope
from .scenario import ScenarioSpec, build_world, rsu_grid
from .schemes import RevocationMetrics, make_scheme, run_revocation

EXPERIMENTS = ("E1", "E2", "E3", "E4", "E5", "E6")
MODELS = ("Manhattan", "Highway")

OUTPUT_FILES = {
    "E1": ("e1_speed.csv", ("fig10.dat",)),
    "E2": ("e2_density.csv", ("fig11.dat",)),
    "E3": ("e3_area.csv", ("fig12.dat", "fig13.dat")),
    "E4": ("e4_delay.csv", ("fig14.dat",)),
    "E5": ("e5_delivery.csv", ("fig15.dat",)),
    "E6": ("e6_managers.csv", ("fig16.dat",)),
}

RUN_COLUMNS = ("model", "scheme", "seed", "vehicles", "rsus", "managers", "area_km2", "delay_ms",
               "messages_sent", "rsu_targets", "vehicles_warned", "intended", "delivery_ratio",
               "t_e2e_s", "tracking_msgs")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "E2"
    model: str = "Manhattan"
    area: float = 25.0                  # km^2
    vehicles: int = 30
    rsus: int = 0                       # 0: derived from the grid
    rsu_spacing: float = 500.0          # m
    managers: int = 4
    cert_lifetime: float = 300.0        # s
    speed: float = 60.0                 # max km/h
    min_speed: float = 0.0              # km/h, 0: half of speed
    duration: float = 0.0               # s, 0: revoke time plus a tail
    revoke_after: float = 0.0           # s after the target's issuance, 0: half the lifetime
    t_p_ca: float = 0.001
    t_ca: float = 0.010
    t_p_man: float = 0.001
    t_man: float = 0.010
    t_p_rsu: float = 0.001
    t_rsu: float = 0.005
    radio_latency: float = 0.002
    radio_range: float = 300.0
    loss_rate: float = 0.0
    delay_sweep: tuple[float, ...] = ()       # ms, applied to every wired hop
    vehicles_sweep: tuple[int, ...] = ()
    area_sweep: tuple[float, ...] = ()
    managers_sweep: tuple[int, ...] = ()
    speed_sweep: tuple[float, ...] = ()
    schemes: tuple[str, ...] = ("DYN", "BRD")
    replications: int = 10
    seed: int = 0
    crypto: str = "mock"
    dyn_delivery: str = "fanout"        # fanout | sequential
    routing_scope: str = "chain"        # chain | domain
    count_tracking: bool = False        # add manager hand-off traffic to the message metric

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS + ("Custom",):
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        for name in ("area", "rsu_spacing", "cert_lifetime", "speed", "radio_range"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.vehicles < 1 or self.managers < 1:
            raise ConfigError("vehicles and managers must be >= 1")
        for name in ("t_p_ca", "t_ca", "t_p_man", "t_man", "t_p_rsu", "t_rsu", "radio_latency",
                     "min_speed", "duration", "revoke_after", "rsus"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if not 0 <= self.loss_rate <= 1:
            raise ConfigError("loss_rate must be in [0, 1]")
        if self.crypto not in ("mock", "real"):
            raise ConfigError("crypto must be mock or real")
        if self.dyn_delivery not in ("fanout", "sequential"):
            raise ConfigError("dyn_delivery must be fanout or sequential")
        if self.routing_scope not in ("chain", "domain"):
            raise ConfigError("routing_scope must be chain or domain")
        for s in self.schemes:
            if s not in ("DYN", "BRD"):
                raise ConfigError(f"unknown scheme {s!r}")
        if any(x <= 0 for x in (*self.delay_sweep, *self.vehicles_sweep, *self.area_sweep,
                                 *self.managers_sweep, *self.speed_sweep)):
            raise ConfigError("sweep values must be positive")
        return self

    @property
    def revoke_offset(self) -> float:
        return self.revoke_after or self.cert_lifetime / 2

    def link(self) -> LinkModel:
        return LinkModel(self.t_ca, self.t_man, self.t_rsu, self.t_p_ca, self.t_p_man, self.t_p_rsu,
                         self.radio_latency, self.radio_range, self.loss_rate)

    def timing(self) -> analytics.TimingParams:
        return analytics.TimingParams(self.t_p_ca, self.t_ca, self.t_p_man, self.t_man,
                                      self.t_p_rsu, self.t_rsu)

    def header(self) -> list[str]:
        out = []
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, tuple):
                val = ",".join(str(x) for x in val)
            out.append(f"# {f.name}={val}")
        return out


_BASE = {
    "Manhattan": dict(model="Manhattan", area=25.0, rsu_spacing=500.0, radio_range=300.0,
                      speed=60.0, cert_lifetime=300.0, managers=4),
    "Highway": dict(model="Highway", area=6.0, rsu_spacing=1500.0, radio_range=800.0,
                    speed=120.0, min_speed=60.0, cert_lifetime=900.0, managers=4),
}

_DENSITY = (10, 20, 30, 50, 100)

_PRESETS: dict[str, dict[str, dict[str, Any]]] = {
    "E1": {
        "Manhattan": dict(rsus=1000, speed_sweep=tuple(float(v) for v in range(10, 130, 10))),
        "Highway": dict(rsus=1000, speed_sweep=tuple(float(v) for v in range(60, 320, 20))),
    },
    "E2": {m: dict(vehicles_sweep=_DENSITY) for m in MODELS},
    "E3": {
        "Manhattan": dict(area_sweep=(1.0, 4.0, 9.0, 16.0, 25.0)),
        "Highway": dict(area_sweep=(3.0, 6.0, 9.0, 12.0, 15.0)),
    },
    "E4": {m: dict(delay_sweep=(50.0, 100.0, 150.0, 200.0, 250.0, 300.0)) for m in MODELS},
    "E5": {m: dict(vehicles_sweep=_DENSITY) for m in MODELS},
    "E6": {
        "Manhattan": dict(area=4.0, vehicles=30, managers_sweep=(1, 2, 4, 8, 16), duration=100.0,
                          cert_lifetime=180.0, revoke_after=88.0, routing_scope="domain",
                          count_tracking=True),
    },
}


def _coerce(name: str, raw: str) -> Any:
    ftype = {f.name: f for f in fields(ExperimentConfig)}[name].type
    try:
        if "tuple" in str(ftype):
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            if "int" in str(ftype):
                return tuple(int(p) for p in parts)
            if "float" in str(ftype):
                return tuple(float(p) for p in parts)
            return tuple(parts)
        if ftype in ("int", int):
            return int(raw)
        if ftype in ("float", float):
            return float(raw)
        if ftype in ("bool", bool):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def parse_config_text(text: str) -> dict[str, Any]:
    known = {f.name for f in fields(ExperimentConfig)}
    out: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, raw)
    return out


def load_overrides(path: str | Path | None, env: dict[str, str] | None = None) -> dict[str, Any]:
    """Read a config file (optional) and apply the ``VANET_SEED`` override."""
    over = parse_config_text(Path(path).read_text()) if path else {}
    env = os.environ if env is None else env
    if env.get("VANET_SEED"):
        try:
            over["seed"] = int(env["VANET_SEED"])
        except ValueError as exc:
            raise ConfigError("VANET_SEED must be an integer") from exc
    return over


def experiment_configs(experiment: str, overrides: dict[str, Any] | None = None) -> list[ExperimentConfig]:
    """One resolved config per mobility model the experiment covers."""
    overrides = dict(overrides or {})
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    presets = _PRESETS[experiment]
    models = [overrides["model"]] if "model" in overrides else list(presets)
    out = []
    for model in models:
        if model not in MODELS:
            raise ConfigError(f"unknown model {model!r}")
        values = {**_BASE[model], **presets.get(model, {}), **overrides, "experiment": experiment,
                  "model": model}
        out.append(ExperimentConfig(**values).validate())
    return out


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunRow:
    model: str
    scheme: str
    seed: int
    vehicles: int
    rsus: int
    managers: int
    area_km2: float
    delay_ms: float
    messages_sent: int
    rsu_targets: int
    vehicles_warned: int
    intended: int
    delivery_ratio: float
    t_e2e_s: float
    tracking_msgs: int
    x: float = field(default=0.0, compare=False)

    def values(self) -> tuple:
        return tuple(getattr(self, c) for c in RUN_COLUMNS)


@dataclass(frozen=True)
class ResultRow:
    model: str
    x: float
    scheme: str
    mean: float
    ci: float
    n: int


@dataclass
class ResultTable:
    experiment: str
    metric: str
    x_label: str
    configs: list[ExperimentConfig]
    runs: list[RunRow] = field(default_factory=list)
    rows: list[ResultRow] = field(default_factory=list)
    analytic: list[analytics.SweepRow] = field(default_factory=list)
    extra_plots: dict[str, list[ResultRow]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.runs) + len(self.rows) + len(self.analytic)

    def series(self, model: str, scheme: str) -> list[ResultRow]:
        return sorted((r for r in self.rows if r.model == model and r.scheme == scheme), key=lambda r: r.x)


def ci95(values: list[float]) -> tuple[float, float]:
    """Mean and 95% Student-t half-width."""
    n = len(values)
    if n == 0:
        raise ValueError("no samples")
    mean = statistics.fmean(values)
    if n == 1:
        return mean, 0.0
    sd = statistics.stdev(values)
    return mean, float(stats.t.ppf(0.975, n - 1)) * sd / math.sqrt(n)


def _scheme(cfg: ExperimentConfig, name: str):
    if name == "BRD":
        return make_scheme("BRD")
    return make_scheme("DYN",
                       delivery=Delivery.SEQUENTIAL if cfg.dyn_delivery == "sequential" else Delivery.FANOUT,
                       scope=Scope.DOMAIN if cfg.routing_scope == "domain" else Scope.CHAIN)


def _spec(cfg: ExperimentConfig, seed: int) -> ScenarioSpec:
    duration = cfg.duration or (cfg.revoke_offset + 60.0)
    return ScenarioSpec(model=cfg.model, area_km2=cfg.area, vehicles=cfg.vehicles,
                        rsu_spacing=cfg.rsu_spacing, managers=cfg.managers, speed=cfg.speed,
                        min_speed=cfg.min_speed or None, duration=duration,
                        cert_lifetime=cfg.cert_lifetime, link=cfg.link(), seed=seed, crypto=cfg.crypto)


def pick_target(world: World, latest_issue: float):
    """Lowest-id vehicle certified by ``latest_issue``; the world is advanced as needed."""
    order = sorted(world.vehicles)
    while True:
        for vid in order:
            v = world.vehicles[vid]
            if v.cert is not None:
                return v
        if world.clock >= latest_issue:
            return None
        world.run_until(min(latest_issue, world.clock + 1.0))


def simulate(cfg: ExperimentConfig, scheme_name: str, seed: int) -> tuple[RevocationMetrics, World]:
    """Build a world, let keys spread, revoke one vehicle mid-lifetime."""
    spec = _spec(cfg, seed)
    world = build_world(spec)
    if cfg.rsus and cfg.rsus != len(world.rsus):
        raise ConfigError(f"rsus={cfg.rsus} but the grid places {len(world.rsus)}")
    world.start_mobility()
    target = pick_target(world, max(0.0, spec.duration - cfg.revoke_offset))
    if target is None:
        return RevocationMetrics(scheme_name), world
    t_rev = target.cert.issue_time + cfg.revoke_offset  # type: ignore[union-attr]
    metrics = run_revocation(_scheme(cfg, scheme_name), world, target.elp.value, t_rev)
    world.purge()
    return metrics, world


def _row(cfg: ExperimentConfig, world: World, m: RevocationMetrics, seed: int, x: float) -> RunRow:
    delay = cfg.t_ca * 1000.0
    return RunRow(cfg.model, m.scheme, seed, cfg.vehicles, len(world.rsus), cfg.managers, cfg.area,
                  round(delay, 6), m.messages_sent, m.rsu_targets, m.vehicles_warned,
                  m.intended_recipients, round(m.delivery_ratio, 9), round(m.t_e2e_measured, 9),
                  m.tracking_messages, x)


def _points(cfg: ExperimentConfig) -> tuple[str, list[tuple[float, ExperimentConfig]]]:
    e = cfg.experiment
    if e in ("E2", "E5"):
        return "vehicles", [(float(n), replace(cfg, vehicles=n)) for n in cfg.vehicles_sweep or (cfg.vehicles,)]
    if e == "E3":
        return "area_km2", [(a, replace(cfg, area=a)) for a in cfg.area_sweep or (cfg.area,)]
    if e == "E4":
        pts = []
        for ms in cfg.delay_sweep or (cfg.t_ca * 1000,):
            s = ms / 1000.0
            pts.append((ms, replace(cfg, t_ca=s, t_man=s, t_rsu=s)))
        return "delay_ms", pts
    if e == "E6":
        return "managers", [(float(k), replace(cfg, managers=k)) for k in cfg.managers_sweep or (cfg.managers,)]
    return "x", [(0.0, cfg)]


def _metric(cfg: ExperimentConfig) -> tuple[str, Callable[[RunRow], float]]:
    if cfg.experiment == "E5":
        return "delivery_ratio", lambda r: r.delivery_ratio
    if cfg.count_tracking:
        return "messages_incl_tracking", lambda r: r.messages_sent + r.tracking_msgs
    return "messages_sent", lambda r: r.messages_sent


def _aggregate(table: ResultTable, runs: list[RunRow], value: Callable[[RunRow], float]) -> list[ResultRow]:
    groups: dict[tuple[str, float, str], list[RunRow]] = {}
    for r in runs:
        groups.setdefault((r.model, r.x, r.scheme), []).append(r)
    out = []
    for (model, x, scheme) in sorted(groups):
        rs = groups[(model, x, scheme)]
        if table.experiment == "E5":
            # Pooled over replications: total warned over total intended.
            intended = sum(r.intended for r in rs)
            mean = sum(r.vehicles_warned for r in rs) / intended if intended else 0.0
            _, ci = ci95([r.delivery_ratio for r in rs])
        else:
            mean, ci = ci95([value(r) for r in rs])
        out.append(ResultRow(model, x, scheme, mean, ci, len(rs)))
    return out


def _analytic_e1(cfg: ExperimentConfig) -> list[analytics.SweepRow]:
    return analytics.sweep_speed(cfg.cert_lifetime, cfg.rsu_spacing, cfg.rsus or 1000,
                                 cfg.speed_sweep or (cfg.speed,), cfg.model)


def _analytic_e3(cfg: ExperimentConfig) -> list[tuple[float, analytics.SweepRow]]:
    out = []
    for a in cfg.area_sweep or (cfg.area,):
        n = len(rsu_grid(_spec(replace(cfg, area=a), cfg.seed).bounds(), cfg.rsu_spacing))
        for row in analytics.sweep_area([a], n / a, cfg.speed, cfg.cert_lifetime, cfg.rsu_spacing, cfg.model):
            out.append((a, row))
    return out


def run_experiment(configs: ExperimentConfig | Iterable[ExperimentConfig],
                   progress: Callable[[str], None] | None = None) -> ResultTable:
    cfgs = [configs] if isinstance(configs, ExperimentConfig) else list(configs)
    if not cfgs:
        raise ConfigError("no configuration")
    for c in cfgs:
        c.validate()
    exp = cfgs[0].experiment
    metric, value = _metric(cfgs[0])
    if exp == "E1":
        table = ResultTable(exp, "messages", "v_kmh", cfgs)
        for cfg in cfgs:
            table.analytic.extend(_analytic_e1(cfg))
        for r in table.analytic:
            table.rows.append(ResultRow(r.model, r.v_kmh, "DYN", float(r.dyn_msgs), 0.0, 1))
            table.rows.append(ResultRow(r.model, r.v_kmh, "BRD", float(r.brd_msgs), 0.0, 1))
        return table
    x_label, _ = _points(cfgs[0])
    table = ResultTable(exp, metric, x_label, cfgs)
    for cfg in cfgs:
        for x, pcfg in _points(cfg)[1]:
            for scheme in cfg.schemes:
                for rep in range(cfg.replications):
                    seed = cfg.seed * 1000 + rep
                    m, world = simulate(pcfg, scheme, seed)
                    table.runs.append(_row(pcfg, world, m, seed, x))
                if progress:
                    progress(f"{exp} {cfg.model} {x_label}={x:g} {scheme} done")
        if exp == "E3":
            for a, r in _analytic_e3(cfg):
                table.analytic.append(r)
                fig13 = table.extra_plots.setdefault("fig13.dat", [])
                fig13.append(ResultRow(r.model, a, "DYN", float(r.dyn_msgs), 0.0, 1))
                fig13.append(ResultRow(r.model, a, "BRD", float(r.brd_msgs), 0.0, 1))
    table.rows = _aggregate(table, table.runs, value)
    return table


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return repr(round(v, 9))
    return str(v)


def _csv(header: Iterable[str], rows: Iterable[tuple], comments: list[str]) -> str:
    lines = list(comments)
    lines.append(",".join(header))
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _dat(table: ResultTable, rows: list[ResultRow], comments: list[str], x_label: str, metric: str) -> str:
    schemes = sorted({r.scheme for r in rows}, key=lambda s: (s != "DYN", s))
    lines = list(comments)
    lines.append(f"# metric={metric}")
    cols = ["model", x_label] + [c for s in schemes for c in (s, f"{s}_ci95")]
    lines.append("# " + " ".join(cols))
    index = {(r.model, r.x, r.scheme): r for r in rows}
    for model, x in sorted({(r.model, r.x) for r in rows}):
        vals = [model, _fmt(x)]
        for s in schemes:
            r = index.get((model, x, s))
            vals += [_fmt(r.mean), _fmt(r.ci)] if r else ["nan", "nan"]
        lines.append(" ".join(vals))
    return "\n".join(lines) + "\n"


def render(table: ResultTable) -> dict[str, str]:
    """File name -> content for one experiment."""
    if not len(table):
        raise ValueError("empty result table")
    csv_name, plots = OUTPUT_FILES[table.experiment]
    comments = [line for cfg in table.configs for line in cfg.header()]
    files: dict[str, str] = {}
    if table.experiment == "E1":
        files[csv_name] = _csv(analytics.SWEEP_COLUMNS,
                               ((r.model, r.v_kmh, r.l_s, r.d_m, r.N, r.r_m, r.m_msgs, r.p_pct, r.brd_msgs)
                                for r in table.analytic), comments)
    else:
        runs = sorted(table.runs, key=lambda r: (r.model, r.x, r.scheme, r.seed))
        files[csv_name] = _csv(RUN_COLUMNS, (r.values() for r in runs), comments)
    files[plots[0]] = _dat(table, table.rows, comments, table.x_label, table.metric)
    for name in plots[1:]:
        files[name] = _dat(table, table.extra_plots.get(name, []), comments, "area_km2", "analytic_messages")
    return files


def emit_results(table: ResultTable, out_dir: str | Path) -> list[Path]:
    """Write all files for ``table`` into ``out_dir``; nothing is left behind on failure."""
    files = render(table)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=out))
    except OSError as exc:
        raise IoError(f"cannot write to {out}: {exc}") from exc
    try:
        for name, text in files.items():
            (tmp / name).write_text(text)
        written = []
        for name in files:
            os.replace(tmp / name, out / name)
            written.append(out / name)
        return written
    except OSError as exc:
        raise IoError(f"cannot write to {out}: {exc}") from exc
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
