"""Smoke test for the semidiscrete_py extension module.

Build and install it first, e.g.

    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/semidiscrete_py-*.whl

then run `python python/smoke_test.py`.
"""

import math

import semidiscrete_py as sd


def main():
    model = sd.Model.heston32(0.1, 70.0, math.sqrt(0.2), 1.0, 1.0)
    assert model.family == "heston32"
    status, findings = model.validate()
    assert status == "Ok", findings

    value, flag = sd.sd_step(model, 0.0, 1.0, 0.01, 0.05)
    assert value > 0.0 and flag == "none"
    assert sd.hms_step(model, 0.0, 1.0, 0.01, -0.3) > 0.0

    table1 = sd.Model.heston32(1.0, 1000.0, 1.0, 1.0, 1.0)
    assert abs(sd.tamed_step(table1, 0.0, 1.0, 0.125, 0.0) - (-7.0)) < 1e-12

    lattice = sd.generate_lattice(2013, 0, 1.0, 8)
    fine = lattice.fine_increments
    coarse = lattice.coarsen(7)
    assert len(fine) == 256 and len(coarse) == 128
    assert coarse[0] == fine[0] + fine[1]

    path = sd.simulate_path("SD", model, lattice.coarsen(5), 1.0 / 32, trajectory=True)
    assert len(path.trajectory) == 33 and path.first_negative_step is None

    rows = sd.run_endpoint_errors(
        model, ["SD", "HMS"], [1, 3, 5], 8, batches=10, paths_per_batch=15, seed=1, workers=2
    )
    assert [(r.scheme, r.level_exponent) for r in rows][:3] == [("SD", 1), ("SD", 3), ("SD", 5)]
    slope, _ = sd.fit_order([(r.dt, r.error) for r in rows if r.scheme == "SD"])
    assert slope > 0.0

    census = sd.negativity_census("TAMED", table1, 400, 1000, seed=7)
    assert 0.35 < census.fraction_negative < 0.65
    assert sd.negativity_census("SD", table1, 400, 1000, seed=7).fraction_negative == 0.0

    ex2 = sd.Model.example2(0.5, 30.0, 0.4, 1.25, 2.0, 1.0)
    z0 = ex2.transformed().x0
    assert abs(sd.inverse_transform(z0, 1.25) - 2.0) < 1e-12

    assert sd.t_quantile(0.10, 20) == 1.73
    try:
        sd.Model.example2(0.5, 30.0, 0.4, 1.6, 1.0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("r outside (1, 3/2) accepted")

    print("semidiscrete_py smoke test passed; SD slope over 3 levels = %.3f" % slope)


if __name__ == "__main__":
    main()
