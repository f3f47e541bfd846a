"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Desk scale throughout: at most 10 agents, runs of at most 50 s of model time,
step 1e-3 unless a criterion only reports (the basin probe uses a coarser
step; its output is an empirical fraction, not an assertion).
"""

import numpy as np

from liecoord.controllers import (
    ControlSetting,
    build_controller,
    check_sign_condition,
    compatibility_check,
    double_bracket_field,
)
from liecoord.graphs import CommGraph
from liecoord.groups import GROUPS, SE2, SE3, SO3
from liecoord.simulator import InitSpec, ScenarioConfig, SwarmState, left_translated, run
from liecoord.analysis import (
    check_coordination,
    cm_algebra_dimension,
    generate_tc_configuration,
    tc_basin_probe,
    random_cm_element,
    se2_circle_center,
    se3_screw_axis,
    so3_saddle_escape,
)

E1, E2, E3 = np.eye(3)


def _report(num, name, ok, detail=""):
    print(f"[ACCEPTANCE {num:02d}] {name}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


# ---------------------------------------------------------------------------

def test_c01_algebraic_suite():
    """Adjoint homomorphism, bracket equivariance, Jacobi, pairing relation,
    exp flow property: 1000 random samples per group."""
    n_samples = 1000
    worst = {}
    for group in GROUPS.values():
        rng = np.random.default_rng(1)
        g = group.random(rng, n_samples, pos_scale=2.0)
        h = group.random(rng, n_samples, pos_scale=2.0)
        x1 = group.random_algebra(rng, n_samples)
        x2 = group.random_algebra(rng, n_samples)
        x3 = group.random_algebra(rng, n_samples)

        hom = np.max(np.abs(
            group.adjoint(group.compose(g, h), x1)
            - group.adjoint(g, group.adjoint(h, x1))
        ))
        equi = np.max(np.abs(
            group.adjoint(g, group.bracket(x1, x2))
            - group.bracket(group.adjoint(g, x1), group.adjoint(g, x2))
        ))
        jac = np.max(np.abs(
            group.bracket(x1, group.bracket(x2, x3))
            + group.bracket(x2, group.bracket(x3, x1))
            + group.bracket(x3, group.bracket(x1, x2))
        ))
        pair = np.max(np.abs(
            np.einsum("ki,ki->k", x1, group.pairing(x2, x3))
            + np.einsum("ki,ki->k", group.bracket(x1, x2), x3)
        ))
        once = group.exp(x1)
        flow = np.max(np.abs(
            group.embed(group.compose(once, once)) - group.embed(group.exp(2.0 * x1))
        ))
        worst[group.name] = (hom, equi, jac, pair, flow)

    ok = all(
        h < 1e-10 and e < 1e-10 and j < 1e-12 and p < 1e-12 and f < 1e-10
        for (h, e, j, p, f) in worst.values()
    )
    detail = "; ".join(
        f"{k}: hom={v[0]:.1e} equi={v[1]:.1e} jac={v[2]:.1e} pair={v[3]:.1e} flow={v[4]:.1e}"
        for k, v in worst.items()
    )
    _report(1, "algebraic suite (1000 samples/group)", ok, detail)


# ---------------------------------------------------------------------------

def _dual_criterion_battery():
    out = []
    for i, grp in enumerate(("so3", "se2", "se3")):
        for seed in (2 * i, 2 * i + 1):
            out.append(ScenarioConfig(group=grp, n_agents=3, controller="ric_consensus",
                                      graph=CommGraph.ring(3), t_end=8.0, h=1e-3,
                                      seed=seed, record_every=5))
    for seed in range(6, 10):
        out.append(ScenarioConfig(group="so3", n_agents=3, controller="lic_consensus",
                                  graph=CommGraph.ring(3), t_end=8.0, h=1e-3,
                                  seed=seed, record_every=5))
    for seed in range(10, 13):
        out.append(ScenarioConfig(group="so3", n_agents=3, controller="tc_left_cascade",
                                  graph=CommGraph.complete(3), t_end=8.0, h=1e-3,
                                  seed=seed, record_every=5))
    for grp in ("so3", "se2", "se3"):
        out.append(ScenarioConfig(group=grp, n_agents=3, controller="zero",
                                  graph=CommGraph.ring(3), t_end=8.0, h=1e-3,
                                  seed=13, record_every=5))
    for seed, grp in ((14, "se2"), (15, "se3")):
        g = GROUPS[grp]
        rng = np.random.default_rng(seed)
        out.append(ScenarioConfig(group=grp, n_agents=3, controller="constant",
                                  controller_params={"xi": g.random_algebra(rng)},
                                  graph=CommGraph.ring(3), t_end=8.0, h=1e-3,
                                  seed=seed, record_every=5))
    for seed in (16, 17):
        rng = np.random.default_rng(seed)
        xi = np.array([1.0, 0.0, 0.7])
        g0 = generate_tc_configuration(SE2, xi, 3, rng)
        g0 = SE2.compose(g0, SE2.exp(0.02 * rng.standard_normal((3, 3))))
        out.append(ScenarioConfig(
            group="se2", n_agents=3, controller="underactuated_lic",
            control=ControlSetting.se2_steering(), graph=CommGraph.complete(3),
            t_end=20.0, h=1e-3, seed=seed, record_every=5,
            init=InitSpec(kind="explicit", g0=g0, aux0={"eta": np.tile(xi, (3, 1))})))
    return out


def test_c02_dual_criterion_equivalence():
    """Position-drift and velocity-gap criteria return the same verdict for
    both coordination modes over 20 seeded closed-loop scenarios."""
    cases = _dual_criterion_battery()
    assert len(cases) >= 20
    agree = 0
    for cfg in cases:
        rep = check_coordination(run(cfg), "tc", window=1.0, tol=1e-3)
        lic_ok = rep.lic_by_position == rep.lic_by_velocity
        ric_ok = rep.ric_by_velocity == rep.ric_by_position
        agree += int(lic_ok and ric_ok)
    _report(2, "coordination criteria agree (LIC and RIC)", agree == len(cases),
            f"{agree}/{len(cases)} scenarios")


# ---------------------------------------------------------------------------

def test_c03_ric_consensus_rate_and_limit():
    """Body-velocity consensus on a fixed undirected ring: convergence to the
    initial average by T=20 and exponential rate at least 0.9 x algebraic
    connectivity."""
    graph = CommGraph.ring(4)
    cfg = ScenarioConfig(group="se2", n_agents=4, controller="ric_consensus",
                         graph=graph, t_end=20.0, h=1e-3, seed=4, record_every=10)
    traj = run(cfg)
    xi = traj.aux["xi"]
    avg0 = xi[0].mean(axis=0)
    terminal_gap = float(np.max(np.linalg.norm(xi[-1] - avg0, axis=-1)))

    dev = np.linalg.norm(xi - avg0, axis=-1).max(axis=-1)
    sel = (traj.times >= 0.5) & (traj.times <= 6.0) & (dev > 1e-14)
    slope = np.polyfit(traj.times[sel], np.log(dev[sel]), 1)[0]
    rate = -slope
    lam2 = graph.algebraic_connectivity()

    ok = terminal_gap < 1e-8 and rate >= 0.9 * lam2
    _report(3, "consensus to initial average at connectivity rate", ok,
            f"terminal gap={terminal_gap:.2e}, fit rate={rate:.3f} vs 0.9*lam2={0.9 * lam2:.3f}")


# ---------------------------------------------------------------------------

def test_c04_spatial_reference_cascade():
    """Cascade with spatial-reference consensus on rotations, fixed undirected
    ring, started near a coordinated configuration: spatial auxiliaries reach
    the initial average, the coordination cost is non-increasing after the
    consensus transient, and the end state is totally coordinated."""
    eps = 1e-3
    rng = np.random.default_rng(7)
    xi = np.array([0.6, -0.2, 0.7])
    g0 = generate_tc_configuration(SO3, xi, 4, rng)
    g0 = SO3.compose(g0, SO3.exp(eps * rng.standard_normal((4, 3))))
    eta0 = np.tile(xi, (4, 1)) + eps * rng.standard_normal((4, 3))
    cfg = ScenarioConfig(group="so3", n_agents=4, controller="tc_right_cascade",
                         graph=CommGraph.ring(4), t_end=20.0, h=1e-3, seed=0,
                         record_every=1,
                         init=InitSpec(kind="explicit", g0=g0, aux0={"eta": eta0}))
    traj = run(cfg)

    eta_r = SO3.adjoint(traj.g, traj.aux["eta"])
    avg0 = eta_r[0].mean(axis=0)
    avg_gap = float(np.max(np.linalg.norm(eta_r[-1] - avg0, axis=-1)))

    vtr = traj.metrics["V_tr"]
    late = traj.times >= 2.0
    uptick = float(np.max(np.diff(vtr[late]))) if np.sum(late) > 1 else 0.0

    rep = check_coordination(traj, "tc", window=2.0, tol=1e-3)

    ok = avg_gap < 1e-6 and uptick <= 10 * cfg.h ** 2 and rep.achieved
    _report(4, "spatial-reference cascade (avg, descent, TC)", ok,
            f"avg gap={avg_gap:.2e}, max V_tr uptick={uptick:.2e}, TC={rep.achieved}")


# ---------------------------------------------------------------------------

def test_c05_basin_probe_and_saddle_escape():
    """Body-reference cascade on rotations: empirical fraction of random
    starts reaching total coordination on a complete graph and on a tree
    (reported, not asserted), plus guaranteed escape from the perturbed
    anti-aligned saddle."""
    res_c = tc_basin_probe("complete", trials=50, n_agents=3, seed=11,
                              t_end=25.0, h=5e-3, tol=1e-6)
    res_t = tc_basin_probe("tree", trials=50, n_agents=4, seed=12,
                              t_end=25.0, h=5e-3, tol=1e-6)
    traj = so3_saddle_escape(eps=1e-3, seed=13, t_end=40.0, h=1e-3)
    v0, vT = traj.metrics["V_tl"][0], traj.metrics["V_tl"][-1]
    ok = vT < 1e-6 and v0 > 1.0
    _report(5, "basin fractions reported; saddle escape", ok,
            f"{res_c.format()}; {res_t.format()}; saddle V_tl {v0:.1f} -> {vT:.2e}")


# ---------------------------------------------------------------------------

def test_c06_double_bracket_consistency():
    """With the spatial auxiliary pinned, the induced auxiliary velocity is
    the double-bracket field pointwise, and auxiliary norms are conserved."""
    rng = np.random.default_rng(21)
    graph = CommGraph.complete(4)
    xi_r = np.array([0.8, -0.3, 0.5])
    g = SO3.random(rng, 4)
    ctrl = build_controller("tc_right_frozen", SO3, params={"xi_r": xi_r})
    h, steps = 1e-3, 10_000
    state = SwarmState(0.0, g, {})
    worst = 0.0
    norm_dev = 0.0
    base = np.linalg.norm(xi_r)
    for i in range(steps):
        out = ctrl.output(state, graph)
        eta = ctrl.eta(state)
        if i % 20 == 0:
            induced = -SO3.bracket(out.xi, eta)
            flow = double_bracket_field(SO3, eta, graph)
            worst = max(worst, float(np.max(np.abs(induced - flow))))
            norm_dev = max(norm_dev, float(np.max(np.abs(
                np.linalg.norm(eta, axis=-1) - base))))
        state = SwarmState(state.t + h, SO3.compose(state.g, SO3.exp(h * out.xi)), {})
    ok = worst < 1e-10 and norm_dev < 1e-6
    _report(6, "double-bracket consistency and norm conservation", ok,
            f"pointwise gap={worst:.2e}, norm drift={norm_dev:.2e} over T=10")


# ---------------------------------------------------------------------------

def _alternating_graph():
    return CommGraph(4, [(0.0, {(0, 1), (2, 3)}), (0.5, {(1, 2), (3, 0)})], period=1.0)


def _steering_gap_and_vk(traj, eta_l):
    eta_r = SE3.adjoint(traj.g[-1], eta_l)
    gap = max(np.linalg.norm(eta_r[j] - eta_r[k])
              for j in range(4) for k in range(4))
    return gap, float(np.max(traj.metrics["V_k"][-1]))


def test_c07_se3_steering_both_variants():
    """Steering control on SE(3) over a uniformly connected, time-varying
    directed graph: both consensus variants synchronize the spatial
    auxiliaries, the per-agent feasibility costs vanish, the runs reach LIC,
    and the sign condition is an equality on 10^4 orbit samples."""
    graph = _alternating_graph()
    assert graph.is_uniformly_connected(0.4, 1.0, horizon=10.0)
    cs = ControlSetting.se3_steering()

    # straight-motion variant: nearly aligned headings, feasible auxiliaries
    rng = np.random.default_rng(100)
    base = SO3.random(rng)
    Q0 = SO3.compose(base, SO3.exp(0.02 * rng.standard_normal((4, 3))))
    g0 = SE3.make(2.0 * rng.uniform(-1, 1, (4, 3)), Q0)
    traj_lin = run(ScenarioConfig(
        group="se3", n_agents=4, controller="se3_steering_linear", control=cs,
        graph=graph, t_end=40.0, h=1e-3, seed=0,
        init=InitSpec(kind="explicit", g0=g0)))
    eta_lin = np.concatenate([traj_lin.aux["eta_v"][-1],
                              np.zeros_like(traj_lin.aux["eta_v"][-1])], axis=-1)
    gap_lin, vk_lin = _steering_gap_and_vk(traj_lin, eta_lin)
    lic_lin = check_coordination(traj_lin, "lic", window=2.0, tol=1e-3).achieved

    # helical variant: perturbed coordinated helix
    rng = np.random.default_rng(101)
    xi = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.6])
    g0h = generate_tc_configuration(SE3, xi, 4, rng, scale=0.8)
    xi_r = SE3.adjoint(g0h[0], xi)
    Qt = np.swapaxes(SE3.rotation(g0h), -1, -2)
    aux0 = {
        "alpha": np.einsum("kij,j->ki", Qt, xi_r[3:]),
        "beta": -np.einsum("kij,kj->ki", Qt, SE3.position(g0h)),
        "gamma": np.einsum("kij,j->ki", Qt, xi_r[:3]),
    }
    eps = 1e-2
    g0h = SE3.compose(g0h, SE3.exp(eps * rng.standard_normal((4, 6))))
    aux0 = {k: v + eps * rng.standard_normal(v.shape) for k, v in aux0.items()}
    traj_hel = run(ScenarioConfig(
        group="se3", n_agents=4, controller="se3_steering_helical", control=cs,
        graph=graph, t_end=40.0, h=1e-3, seed=1,
        init=InitSpec(kind="explicit", g0=g0h, aux0=aux0)))
    a, b, c = (traj_hel.aux[k][-1] for k in ("alpha", "beta", "gamma"))
    eta_hel = np.concatenate([c + np.cross(b, a), a], axis=-1)
    gap_hel, vk_hel = _steering_gap_and_vk(traj_hel, eta_hel)
    lic_hel = check_coordination(traj_hel, "lic", window=2.0, tol=1e-3).achieved

    sign = check_sign_condition(SE3, cs, samples=10_000,
                                rng=np.random.default_rng(102))

    ok = (gap_lin < 1e-6 and vk_lin < 1e-6 and lic_lin
          and gap_hel < 1e-6 and vk_hel < 1e-6 and lic_hel
          and sign.verdict == "equality")
    _report(7, "SE(3) steering, both consensus variants", ok,
            f"linear: gap={gap_lin:.2e} Vk={vk_lin:.2e} LIC={lic_lin}; "
            f"helical: gap={gap_hel:.2e} Vk={vk_hel:.2e} LIC={lic_hel}; "
            f"sign={sign.verdict}")


# ---------------------------------------------------------------------------

def test_c08_closed_form_geometry():
    """Generated coordinated configurations flown open loop reproduce the
    common circle on SE(2), the common-pitch helix on SE(3), and the isotropy
    dimension table."""
    # (a) SE(2) circle
    rng = np.random.default_rng(31)
    v, w0 = np.array([0.9, -0.3]), 0.8
    xi2 = np.array([*v, w0])
    g0 = generate_tc_configuration(SE2, xi2, 5, rng)
    centers = se2_circle_center(g0, xi2)
    radius = np.linalg.norm(v) / abs(w0)
    traj = run(ScenarioConfig(group="se2", n_agents=5, controller="constant",
                              controller_params={"xi": xi2}, graph=CommGraph.complete(5),
                              t_end=10.0, h=1e-3, seed=0, record_every=100,
                              init=InitSpec(kind="explicit", g0=g0)))
    radius_err = float(np.max(np.abs(
        np.linalg.norm(traj.g[:, :, :2] - centers[0], axis=-1) - radius)))
    center_spread = float(np.max(np.abs(centers - centers[0])))

    # (b) SE(3) helix
    rng = np.random.default_rng(32)
    v3, w3 = np.array([1.0, 0.2, 0.3]), np.array([0.1, -0.2, 0.9])
    xi3 = np.concatenate([v3, w3])
    g0 = generate_tc_configuration(SE3, xi3, 4, rng)
    point, direction, _ = se3_screw_axis(g0, xi3)
    traj3 = run(ScenarioConfig(group="se3", n_agents=4, controller="constant",
                               controller_params={"xi": xi3}, graph=CommGraph.complete(4),
                               t_end=8.0, h=1e-3, seed=0, record_every=100,
                               init=InitSpec(kind="explicit", g0=g0)))
    adv_first = SE3.position(traj3.g[0]) @ direction[0]
    adv_last = SE3.position(traj3.g[-1]) @ direction[0]
    measured = (adv_last - adv_first) / (traj3.times[-1] - traj3.times[0]) * np.linalg.norm(w3)
    pitch_err = float(np.max(np.abs(measured - v3 @ w3)))

    # (c) isotropy dimension table
    rng = np.random.default_rng(33)
    v2r = rng.standard_normal(2)
    v3r, w3r = rng.standard_normal(3), rng.standard_normal(3)
    table = (
        cm_algebra_dimension(SO3, w3r) == 1
        and cm_algebra_dimension(SE2, np.zeros(3)) == 3
        and cm_algebra_dimension(SE2, np.array([*v2r, 0.0])) == 2
        and cm_algebra_dimension(SE2, np.array([*v2r, 0.9])) == 1
        and cm_algebra_dimension(SE3, np.zeros(6)) == 6
        and cm_algebra_dimension(SE3, np.array([*v3r, 0, 0, 0])) == 4
        and cm_algebra_dimension(SE3, np.concatenate([v3r, w3r])) == 2
    )

    ok = radius_err < 1e-6 and center_spread < 1e-6 and pitch_err < 1e-6 and table
    _report(8, "circle / helix / isotropy-dimension oracles", ok,
            f"radius err={radius_err:.2e}, pitch err={pitch_err:.2e}, table={table}")


# ---------------------------------------------------------------------------

def test_c09_compatibility_on_and_off_circle():
    """SE(2) steering: agent pairs placed by the isotropy recipe are
    compatible; a radial offset of 1e-2 off the circle is not (20 seeded
    cases)."""
    cs = ControlSetting.se2_steering()
    w0 = 0.8
    xi = np.array([1.0, 0.0, w0])
    center = np.array([0.0, 1.0 / w0])  # circle of xi through the identity
    good = bad = 0
    n_cases = 20
    for seed in range(n_cases):
        rng = np.random.default_rng(200 + seed)
        g_k = SE2.random(rng)
        lam = random_cm_element(SE2, xi, rng)
        # keep clear of the degenerate points of the radial construction
        while np.linalg.norm(lam[:2]) < 0.3 or np.linalg.norm(lam[:2] - 2 * center) < 0.3:
            lam = random_cm_element(SE2, xi, rng)
        g = np.stack([SE2.compose(g_k, lam), g_k])
        ok_on = compatibility_check(SE2, g, cs, mode="lic")[0, 1]

        radial = (lam[:2] - center) / np.linalg.norm(lam[:2] - center)
        lam_off = SE2.make(lam[:2] + 1e-2 * radial, lam[2])
        g_off = np.stack([SE2.compose(g_k, lam_off), g_k])
        ok_off = compatibility_check(SE2, g_off, cs, mode="lic")[0, 1]
        good += int(ok_on)
        bad += int(not ok_off)
    ok = good == n_cases and bad == n_cases
    _report(9, "steering compatibility on/off the circle", ok,
            f"on-circle {good}/{n_cases} compatible, off-circle {bad}/{n_cases} incompatible")


# ---------------------------------------------------------------------------

def _invariance_matrix():
    """Per-group (controller, control setting) cases; the pinned-reference
    variant is excluded because it feeds on a spatial reference and is not a
    left-invariant feedback."""
    common = [
        ("zero", None),
        ("constant", None),
        ("ric_consensus", None),
        ("lic_consensus", None),
        ("tc_right_cascade", None),
        ("tc_left_cascade", None),
        ("experimental_vt_gradient", None),
    ]
    return {
        "so3": common + [
            ("tc_left_cascade", ControlSetting.so3_two_axis(drift=True)),
            ("underactuated_lic", ControlSetting.so3_two_axis(drift=True)),
        ],
        "se2": common + [
            ("underactuated_lic", ControlSetting.se2_steering()),
        ],
        "se3": common + [
            ("underactuated_lic", ControlSetting.se3_steering()),
            ("se3_steering_linear", ControlSetting.se3_steering()),
            ("se3_steering_helical", ControlSetting.se3_steering()),
        ],
    }


def test_c10_left_invariance_of_closed_loops():
    """A common left translation of the initial positions commutes with the
    simulation for every shipped left-invariant controller, 10 seeds per
    group."""
    worst = 0.0
    runs = 0
    for grp, cases in _invariance_matrix().items():
        group = GROUPS[grp]
        for s in range(10):
            name, cs = cases[s % len(cases)]
            seed = 1000 + runs
            rng = np.random.default_rng(seed)
            g0 = group.random(rng, 3)
            params = {}
            if name == "constant":
                params["xi"] = group.random_algebra(rng)
            ctrl = build_controller(name, group, cs=cs, params=params)
            aux0 = ctrl.default_aux(g0, rng, scale=0.7)
            cfg = ScenarioConfig(
                group=grp, n_agents=3, controller=name, control=cs,
                controller_params=params, graph=CommGraph.ring(3),
                t_end=1.0, h=1e-3, seed=seed,
                init=InitSpec(kind="explicit", g0=g0, aux0=aux0))
            h0 = group.random(rng)
            t1 = run(cfg)
            t2 = run(left_translated(cfg, h0))
            gap = float(np.max(np.abs(
                group.embed(group.compose(h0, t1.g[-1])) - group.embed(t2.g[-1]))))
            for k in t1.aux:
                gap = max(gap, float(np.max(np.abs(t1.aux[k][-1] - t2.aux[k][-1]))))
            worst = max(worst, gap)
            runs += 1
    ok = worst < 1e-9 and runs == 30
    _report(10, "left-invariance of every shipped closed loop", ok,
            f"{runs} runs (10 seeds x 3 groups), worst gap={worst:.2e}")


# ---------------------------------------------------------------------------

def _order_scenario(grp, controller, cs, seed):
    group = GROUPS[grp]
    rng = np.random.default_rng(seed)
    g0 = group.random(rng, 3, rot_scale=0.4 if grp == "se3" else None)
    ctrl = build_controller(controller, group, cs=cs)
    aux0 = ctrl.default_aux(g0, rng, scale=0.8)

    def terminal(h):
        cfg = ScenarioConfig(group=grp, n_agents=3, controller=controller,
                             control=cs, graph=CommGraph.complete(3),
                             t_end=2.0, h=h, seed=seed,
                             init=InitSpec(kind="explicit", g0=g0, aux0=aux0))
        return GROUPS[grp].embed(run(cfg).g[-1])

    ref = terminal(1e-4)
    e_coarse = float(np.max(np.abs(terminal(2e-2) - ref)))
    e_fine = float(np.max(np.abs(terminal(1e-2) - ref)))
    return e_coarse / e_fine


def test_c11_integrator_first_order():
    """Halving the step halves the terminal-state error (within 20%) against
    an h/100 reference, across three scenarios."""
    ratios = [
        _order_scenario("se2", "lic_consensus", None, 51),
        _order_scenario("so3", "tc_left_cascade", None, 52),
        _order_scenario("se3", "se3_steering_linear", ControlSetting.se3_steering(), 53),
    ]
    ok = all(1.6 <= r <= 2.4 for r in ratios)
    _report(11, "first-order step-size convergence", ok,
            "ratios " + ", ".join(f"{r:.3f}" for r in ratios))
