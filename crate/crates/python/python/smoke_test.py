"""Smoke test for the hopwalk_py extension.

Build and install first, for example:
    maturin build --release -o dist && pip install dist/hopwalk_py-*.whl
then run:
    python python/smoke_test.py
"""

import math

import hopwalk_py as hw


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    omega = hw.OmegaLaw.uniform(0.6, 0.8)
    tail = hw.TailLaw.weibull(1.0)
    assert close(omega.speed(), 0.3904238, 1e-6), omega.speed()
    assert tail.class_name == "weibull"
    assert close(tail.g(2.0), 2.0, 1e-12)

    try:
        hw.OmegaLaw.uniform(0.4, 0.8)
    except ValueError:
        pass
    else:
        raise AssertionError("omega law outside (1/2, 1) accepted")

    env = hw.Environment(omega, tail, 7)
    sites = env.sites(-3, 3)
    assert len(sites) == 7 and all(0.6 <= w <= 0.8 and m > 0 for _, w, m in sites)
    assert env.site(0) == sites[3][1:]

    # the transient law sums to one up to its series error
    lo, probs, err = hw.transient(env, 5.0, -20, 40, 1e-12)
    assert lo == -20 and close(sum(probs), 1.0, 1e-9), sum(probs)

    # exact value between the bounds, Monte Carlo within 4 standard errors
    cell = hw.slowdown_bracket(env, tail, 20.0, 0.5, mc_replicas=20000, mc_seed=3)
    b = cell["bracket"]
    assert b["lower"] <= b["oracle"] <= b["upper"], b
    mc = b["monte_carlo"]
    assert abs(mc["estimate"] - b["oracle"]) <= 4 * max(mc["std_error"], 1e-4), b

    # h(1e4) for the unit exponential law
    h = hw.solve_h(tail, 1e4)
    assert close(h, 104.7111520, 1e-5), h
    lo_q, hi_q, ann = hw.predicted_exponents(tail, 1e4)
    assert lo_q <= hi_q and close(ann, 1e4 / h, 1e-9)

    speed = hw.estimate_speed_annealed(omega, tail, 200.0, 400, 11)
    assert abs(speed.estimate - omega.speed()) < 5 * speed.std_error + 0.02, speed

    x = hw.simulate_x(env, 50.0, 1)
    assert x == hw.simulate_x(env, 50.0, 1)

    pareto = hw.TailLaw.pareto(2.0)
    planted = hw.planted_estimate(omega, pareto, 10.0, 0.5 * omega.speed(), 5000, 5)
    assert 0.0 < planted["estimate"].estimate < 1.0 and planted["min_weight"] > 0.0

    out = hw.run_experiment(
        "asymptotics",
        """
seed = 1
[environment]
omega = { variant = "uniform", a = 0.6, b = 0.8 }
tail = { variant = "weibull", alpha = 1.0 }
[asymptotics]
t_grid = [100.0, 10000.0]
""",
    )
    assert math.isclose(out["rates"][1]["h"], h, rel_tol=1e-12)

    print("hopwalk_py", hw.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
