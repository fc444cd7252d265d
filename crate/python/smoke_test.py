"""Smoke test for the qlbm_py extension module."""

import json
import math

import qlbm_py as q


def check(cond, msg):
    if not cond:
        raise SystemExit(f"FAIL: {msg}")
    print(f"ok: {msg}")


def main():
    w = q.weights()
    check(len(w) == 27 and abs(sum(w) - 1.0) < 1e-15, "27 weights summing to 1")
    check(all(q.velocity(q.opposite(i)) == [-c for c in q.velocity(i)] for i in range(27)), "opposite map")

    ids = q.catalog_ids()
    check(len(ids) == 11 and "sphere-re1e1" in ids, "catalog ids")
    inst = q.Instance("sphere-re1e1")
    check(abs(inst.lattice_velocity - 0.035) < 5e-4, f"lattice velocity {inst.lattice_velocity:.4f}")
    check(json.loads(inst.to_json())["id"] == "sphere-re1e1", "instance json")

    r = q.norm_report(0.6)
    check(round(r.spectral_bound) == 901, f"spectral bound {r.spectral_bound:.3f}")
    w = q.convergence_window(0.2958, 0.6)
    check(1.105e-4 < w.t_c_lower < w.t_c < w.t_c_upper < 1.238e-4, "convergence window")
    check(w.error_envelope(0.5 * w.t_c) > 0.0, "error envelope")

    c = q.census("dense")
    check((c["f1_nonzeros"], c["f2_nonzeros"], c["f3_nonzeros"]) == (729, 15180, 409860), "dense census")

    sim = q.Simulator((8, 6, 6), tau=0.8, velocity=[0.03, 0.0, 0.0], sphere=([3.5, 2.5, 2.5], 1.5))
    m0 = sim.total_mass()
    j = sim.step(10)
    check(sim.steps == 10 and sim.solid_nodes > 0, "simulator steps")
    check(abs(sim.total_mass() - m0) < 1e-12 * m0, "mass conserved")
    check(all(math.isfinite(x) for x in j), "momentum exchange finite")

    sys = q.CarlemanSystem((1, 1, 1), tau=0.6)
    f = [wi * 1.01 for wi in q.weights()]
    a, b = sys.nonlinear_rhs(f), sys.linear_rhs(f)
    check(max(abs(x - y) for x, y in zip(a, b)) < 1e-12, "Carleman first sector matches nonlinear rhs")

    e = q.estimate("sphere-re1e2")
    prod = math.prod(c for _, c in e.layers) * e.t_gates_per_encoding
    check(abs(prod / e.t_gate_total - 1.0) < 1e-12, "estimate recomposes from layers")
    check(q.qae_counts(0.1, 0.1) == (425.0, 4.0) and q.qae_counts(1e-5, 1e-5)[0] == 1558.0, "QAE counts")
    slope, _, _ = q.fit_power_law([(10.0, 100.0), (100.0, 10000.0)])
    check(abs(slope - 2.0) < 1e-12, "power-law fit")

    try:
        q.norm_report(0.4)
    except ValueError:
        check(True, "tau outside range rejected")
    else:
        check(False, "tau outside range rejected")
    print("smoke test passed")


if __name__ == "__main__":
    main()
