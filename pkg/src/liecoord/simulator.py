"""Closed-loop time integration on the group manifold.

Group positions advance by Lie-Euler steps g <- g * exp(h xi), which keeps
every iterate on the manifold up to rounding; auxiliary variables live in a
vector space and advance by explicit Euler (or classical RK4 against a frozen
position).  A run is sequential and deterministic given its config and seed.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .lie import TAU_MANIFOLD
from .groups import get_group
from .controllers import ControlSetting, build_controller
from .graphs import CommGraph

BLOWUP_NORM = 1e12

METRIC_NAMES = ("V_r", "V_l", "V_tr", "V_tl")


class ConfigError(ValueError):
    pass


class NumericsError(RuntimeError):
    pass


@dataclass
class SwarmState:
    t: float
    g: np.ndarray                 # (N, *element_shape)
    aux: dict[str, np.ndarray]    # per-agent auxiliary vectors

    def with_aux(self, aux):
        return SwarmState(self.t, self.g, aux)


@dataclass
class Event:
    t: float
    kind: str
    agent: int | None = None
    detail: str = ""
    count: int = 1

    def format(self):
        agent = "-" if self.agent is None else str(self.agent)
        return f"t={self.t:.6f} kind={self.kind} agent={agent} count={self.count} detail={self.detail}"


@dataclass
class InitSpec:
    kind: str = "random"          # "random" or "explicit"
    pos_scale: float = 2.0
    rot_scale: float | None = None
    aux_scale: float = 1.0
    g0: np.ndarray | None = None
    aux0: dict[str, np.ndarray] | None = None


@dataclass
class ScenarioConfig:
    group: str
    n_agents: int
    controller: str
    graph: CommGraph
    t_end: float
    h: float = 1e-3
    seed: int = 0
    controller_params: dict = field(default_factory=dict)
    control: ControlSetting | None = None
    reproject_every: int = 100
    record_every: int = 10
    aux_integrator: str = "euler"
    init: InitSpec = field(default_factory=InitSpec)
    stop_metric: str | None = None
    stop_below: float | None = None

    def validate(self):
        if self.n_agents < 1:
            raise ConfigError("agents: must be >= 1")
        if not (self.h > 0.0):
            raise ConfigError("h: must be > 0")
        if not (self.t_end > 0.0):
            raise ConfigError("t_end: must be > 0")
        if self.graph.n != self.n_agents:
            raise ConfigError("graph: agent count differs from the scenario")
        if self.record_every < 1:
            raise ConfigError("record_every: must be >= 1")
        if self.reproject_every < 0:
            raise ConfigError("reproject_every: must be >= 0 (0 disables)")
        if self.aux_integrator not in ("euler", "rk4"):
            raise ConfigError("aux_integrator: must be 'euler' or 'rk4'")
        if (self.stop_metric is None) != (self.stop_below is None):
            raise ConfigError("stop_metric and stop_below go together")
        get_group(self.group)

    def canonical_text(self):
        parts = [
            f"group={self.group}",
            f"agents={self.n_agents}",
            f"controller={self.controller}",
            f"params={sorted((k, _canon(v)) for k, v in self.controller_params.items())}",
            f"control={None if self.control is None else (_canon(self.control.a), _canon(self.control.B))}",
            f"graph=({self.graph.n},{list(self.graph.breakpoints)},"
            f"{[sorted(es) for es in self.graph.edge_sets]},{self.graph.period})",
            f"h={self.h!r}", f"t_end={self.t_end!r}", f"seed={self.seed}",
            f"reproject_every={self.reproject_every}",
            f"record_every={self.record_every}",
            f"aux={self.aux_integrator}",
            f"init=({self.init.kind},{self.init.pos_scale!r},{self.init.rot_scale!r},"
            f"{self.init.aux_scale!r},{_canon(self.init.g0)},"
            f"{sorted((k, _canon(v)) for k, v in (self.init.aux0 or {}).items())})",
            f"stop=({self.stop_metric},{self.stop_below!r})",
        ]
        return "\n".join(parts)

    def config_hash(self):
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


def _canon(x):
    if x is None or isinstance(x, str):
        return x
    return np.asarray(x, dtype=float).tolist()


@dataclass
class Trajectory:
    group_name: str
    times: np.ndarray                  # (S,)
    g: np.ndarray                      # (S, N, *element_shape)
    xi: np.ndarray                     # (S, N, n)
    aux: dict[str, np.ndarray]         # name -> (S, N, d)
    metrics: dict[str, np.ndarray]     # V_* -> (S,), V_k -> (S, N)
    events: list[Event]
    completed: bool
    config: ScenarioConfig | None = None

    @property
    def group(self):
        return get_group(self.group_name)

    @property
    def n_agents(self):
        return self.g.shape[1]

    def state(self, i):
        return SwarmState(
            float(self.times[i]), self.g[i], {k: v[i] for k, v in self.aux.items()}
        )

    @property
    def final(self):
        return self.state(len(self.times) - 1)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def _pair_disagreement(A, x):
    """sum_k sum_{j->k} ||x_k - x_j||^2 for per-agent vectors x."""
    d = x[:, None, :] - x[None, :, :]
    return float(np.einsum("kj,kji->", A, d * d))


def metric_traces(group, g, xi, eta, graph, t, cs=None):
    """Disagreement costs of the current state.

    V_r: body-velocity disagreement; V_l: spatial-velocity disagreement;
    V_tr / V_tl: the same halved costs on the auxiliary velocity eta (xi is
    used when the controller has no auxiliary velocity); V_k: per-agent
    squared distance of eta_k from the feasible set, halved.
    """
    A = graph.in_matrix(t)
    xi_r = group.adjoint(g, xi)
    eta = xi if eta is None else np.asarray(eta, dtype=float)
    eta_r = group.adjoint(g, eta)
    out = {
        "V_r": _pair_disagreement(A, xi),
        "V_l": _pair_disagreement(A, xi_r),
        "V_tr": 0.5 * _pair_disagreement(A, eta),
        "V_tl": 0.5 * _pair_disagreement(A, eta_r),
    }
    if cs is None:
        out["V_k"] = np.zeros(g.shape[0])
    else:
        resid = eta - cs.project(eta)
        out["V_k"] = 0.5 * np.einsum("ki,ki->k", resid, resid)
    return out


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

def _check_velocity(xi):
    bad = ~np.all(np.isfinite(xi), axis=-1)
    if np.any(bad):
        ids = np.nonzero(bad)[0].tolist()
        raise NumericsError(f"non-finite velocity for agent(s) {ids}")


def _advance(group, state, out, h, controller, graph, aux_integrator):
    g_new = group.compose(state.g, group.exp(h * out.xi))
    if aux_integrator == "euler" or not out.aux_dot:
        aux_new = {k: state.aux[k] + h * dk for k, dk in out.aux_dot.items()}
    else:
        # classical RK4 on the auxiliary variables with the position frozen
        def rates(aux, dt):
            probe = SwarmState(state.t + dt, state.g, aux)
            return controller.output(probe, graph).aux_dot

        k1 = out.aux_dot
        k2 = rates({k: state.aux[k] + 0.5 * h * k1[k] for k in k1}, 0.5 * h)
        k3 = rates({k: state.aux[k] + 0.5 * h * k2[k] for k in k1}, 0.5 * h)
        k4 = rates({k: state.aux[k] + h * k3[k] for k in k1}, h)
        aux_new = {
            k: state.aux[k] + (h / 6.0) * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])
            for k in k1
        }
    return SwarmState(state.t + h, g_new, aux_new)


def step(group, state, controller, graph, h, aux_integrator="euler"):
    """One closed-loop step; returns the new state and the controller output
    that produced it."""
    if not (h > 0.0):
        raise ConfigError("h: must be > 0")
    out = controller.output(state, graph)
    _check_velocity(out.xi)
    return _advance(group, state, out, h, controller, graph, aux_integrator), out


# ---------------------------------------------------------------------------
# full runs
# ---------------------------------------------------------------------------

def _initial_state(cfg, group, controller, rng):
    init = cfg.init
    if init.kind == "explicit":
        if init.g0 is None:
            raise ConfigError("init: explicit initial state needs g0")
        g0 = group.require_element(np.asarray(init.g0, dtype=float))
    elif init.kind == "random":
        g0 = group.random(rng, cfg.n_agents, pos_scale=init.pos_scale, rot_scale=init.rot_scale)
    else:
        raise ConfigError(f"init: unknown kind {init.kind!r}")
    if g0.shape[0] != cfg.n_agents:
        raise ConfigError("init: g0 does not match the agent count")
    group.check(g0)
    aux0 = controller.default_aux(g0, rng, scale=init.aux_scale)
    if init.aux0:
        for k, v in init.aux0.items():
            if k not in aux0 and k not in controller.aux_fields:
                raise ConfigError(f"init: controller has no auxiliary state {k!r}")
            aux0[k] = np.asarray(v, dtype=float)
    controller.validate_initial(g0, aux0)
    return SwarmState(0.0, g0, {k: v.copy() for k, v in aux0.items()})


class _EventLog:
    """Deduplicates events by (kind, agent): first time wins, count grows."""

    def __init__(self):
        self._events = {}

    def add(self, t, kind, agent=None, detail=""):
        key = (kind, agent)
        if key in self._events:
            self._events[key].count += 1
        else:
            self._events[key] = Event(t, kind, agent, detail)

    def merge_controller_events(self, t, events):
        for kind, agent, detail in events:
            self.add(t, kind, agent, detail)

    def as_list(self):
        return sorted(self._events.values(), key=lambda e: (e.t, e.kind, e.agent or 0))


def run(cfg):
    """Integrate a scenario and return its recorded trajectory."""
    cfg.validate()
    group = get_group(cfg.group)
    controller = build_controller(cfg.controller, group, cs=cfg.control,
                                  params=cfg.controller_params)
    rng = np.random.default_rng(cfg.seed)
    state = _initial_state(cfg, group, controller, rng)

    n_steps = max(int(round(cfg.t_end / cfg.h)), 1)
    rec_idx = list(range(0, n_steps, cfg.record_every))
    if rec_idx[-1] != n_steps:
        rec_idx.append(n_steps)
    s_max = len(rec_idx)

    times = np.zeros(s_max)
    g_rec = np.zeros((s_max, cfg.n_agents) + group.element_shape)
    xi_rec = np.zeros((s_max, cfg.n_agents, group.dim))
    aux_rec = {
        k: np.zeros((s_max,) + v.shape) for k, v in state.aux.items()
    }
    metric_rec = {name: np.zeros(s_max) for name in METRIC_NAMES}
    metric_rec["V_k"] = np.zeros((s_max, cfg.n_agents))

    log = _EventLog()
    completed = True
    s = 0
    next_rec = set(rec_idx)

    for i in range(n_steps + 1):
        out = controller.output(state, graph=cfg.graph)
        log.merge_controller_events(state.t, out.events)
        stop = False
        if i in next_rec:
            _check_velocity(out.xi)
            if float(np.max(np.abs(group.embed(state.g)))) > BLOWUP_NORM:
                log.add(state.t, "blowup", detail="state norm exceeded 1e12; run aborted")
                completed = False
                stop = True
            times[s] = state.t
            g_rec[s] = state.g
            xi_rec[s] = out.xi
            for k in aux_rec:
                aux_rec[k][s] = state.aux[k]
            m = metric_traces(group, state.g, out.xi, controller.eta_for_metrics(state),
                              cfg.graph, state.t, cs=cfg.control)
            for name in METRIC_NAMES:
                metric_rec[name][s] = m[name]
            metric_rec["V_k"][s] = m["V_k"]
            if not all(np.all(np.isfinite(v[s] if np.ndim(v[s]) else [v[s]]))
                       for v in metric_rec.values()):
                log.add(state.t, "blowup", detail="non-finite metrics; run aborted")
                completed = False
                stop = True
            s += 1
            if not stop and cfg.stop_metric is not None:
                val = metric_rec[cfg.stop_metric][s - 1]
                val = float(np.max(val))
                if val < cfg.stop_below:
                    log.add(state.t, "early_stop",
                            detail=f"{cfg.stop_metric}={val:.3e} < {cfg.stop_below:g}")
                    stop = True
        if stop or i == n_steps:
            break
        _check_velocity(out.xi)
        state = _advance(group, state, out, cfg.h, controller, cfg.graph, cfg.aux_integrator)
        if cfg.reproject_every and (i + 1) % cfg.reproject_every == 0:
            defect = float(np.max(group.manifold_defect(state.g)))
            if defect > TAU_MANIFOLD:
                log.add(state.t, "reproject", detail=f"manifold defect {defect:.3e} corrected")
            state = SwarmState(state.t, group.reproject(state.g), state.aux)

    return Trajectory(
        group_name=cfg.group,
        times=times[:s],
        g=g_rec[:s],
        xi=xi_rec[:s],
        aux={k: v[:s] for k, v in aux_rec.items()},
        metrics={k: v[:s] for k, v in metric_rec.items()},
        events=log.as_list(),
        completed=completed,
        config=cfg,
    )


def left_translated(cfg, h0):
    """Copy of an explicit-init config with every initial position left
    translated by h0 (auxiliary variables unchanged)."""
    group = get_group(cfg.group)
    if cfg.init.kind != "explicit":
        raise ConfigError("left_translated needs an explicit initial state")
    g0 = group.compose(group.require_element(h0), cfg.init.g0)
    return replace(cfg, init=replace(cfg.init, g0=g0))


# ---------------------------------------------------------------------------
# trajectory export / import
# ---------------------------------------------------------------------------

def _fmt(x):
    return format(float(x), ".17g")


def aux_columns(aux):
    cols = []
    for name, arr in aux.items():
        cols.extend(f"{name}{i}" for i in range(arr.shape[-1]))
    return cols


def write_trajectory_csv(traj, path):
    group = traj.group
    n = traj.n_agents
    header = (["t", "agent"] + list(group.payload_columns)
              + [f"xi{i}" for i in range(group.dim)] + aux_columns(traj.aux))
    payload = group.to_payload(traj.g)
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for s in range(len(traj.times)):
            for k in range(n):
                row = [_fmt(traj.times[s]), str(k)]
                row += [_fmt(v) for v in payload[s, k]]
                row += [_fmt(v) for v in traj.xi[s, k]]
                for arr in traj.aux.values():
                    row += [_fmt(v) for v in arr[s, k]]
                f.write(",".join(row) + "\n")


def write_metrics_csv(traj, path):
    n = traj.n_agents
    header = ["t"] + list(METRIC_NAMES) + [f"V_k_{k}" for k in range(n)]
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for s in range(len(traj.times)):
            row = [_fmt(traj.times[s])]
            row += [_fmt(traj.metrics[name][s]) for name in METRIC_NAMES]
            row += [_fmt(v) for v in traj.metrics["V_k"][s]]
            f.write(",".join(row) + "\n")


def write_manifest(traj, path):
    cfg = traj.config
    lines = [
        "schema: 1",
        f"config_hash: {cfg.config_hash() if cfg else 'unknown'}",
        f"group: {traj.group_name}",
        f"agents: {traj.n_agents}",
        f"controller: {cfg.controller if cfg else 'unknown'}",
        f"seed: {cfg.seed if cfg else 'unknown'}",
        f"h: {_fmt(cfg.h) if cfg else 'unknown'}",
        f"t_end: {_fmt(cfg.t_end) if cfg else 'unknown'}",
        f"status: {'completed' if traj.completed else 'aborted'}",
        "events:",
    ]
    lines += [f"- {e.format()}" for e in traj.events]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_manifest(path):
    out = {"events": []}
    with open(path) as f:
        for line in f:
            line = line.rstrip("\n")
            if line.startswith("- "):
                out["events"].append(line[2:])
            elif ": " in line:
                key, val = line.split(": ", 1)
                out[key] = val
            elif line.endswith(":"):
                pass
    return out


_TRAILING_INT = re.compile(r"^(.*?)(\d+)$")


def read_trajectory_csv(path, group_name):
    """Rebuild (times, g, xi, aux) from an exported trajectory file."""
    group = get_group(group_name)
    with open(path) as f:
        header = f.readline().rstrip("\n").split(",")
        data = np.loadtxt(f, delimiter=",", ndmin=2)
    n_payload = len(group.payload_columns)
    want = ["t", "agent"] + list(group.payload_columns) + [f"xi{i}" for i in range(group.dim)]
    if header[: len(want)] != want:
        raise ConfigError(f"unexpected trajectory header for group {group_name}")
    aux_names = []
    for col in header[len(want):]:
        m = _TRAILING_INT.match(col)
        if m is None:
            raise ConfigError(f"unexpected trajectory column {col!r}")
        if not aux_names or aux_names[-1][0] != m.group(1):
            aux_names.append((m.group(1), 0))
        aux_names[-1] = (m.group(1), aux_names[-1][1] + 1)

    agents = data[:, 1].astype(int)
    n = int(agents.max()) + 1 if len(agents) else 0
    if len(data) % n:
        raise ConfigError("trajectory rows are not a whole number of snapshots")
    s = len(data) // n
    data = data.reshape(s, n, -1)
    times = data[:, 0, 0]
    payload = data[:, :, 2:2 + n_payload]
    xi = data[:, :, 2 + n_payload:2 + n_payload + group.dim]
    aux = {}
    ofs = 2 + n_payload + group.dim
    for name, dim in aux_names:
        aux[name] = data[:, :, ofs:ofs + dim]
        ofs += dim
    return times, group.from_payload(payload), xi, aux
