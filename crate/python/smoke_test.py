"""Smoke test for the Python bindings.

Build and install first:
    pip install maturin
    maturin develop --release -m crates/python/Cargo.toml
"""

import json
import math

import cadlag_localtime as lt


def main():
    # a hand path with one jump: 0 -> 1 (diffusive) -> -1 (jump) -> 0
    p = lt.Path.uniform(1.0, [0.0, 1.0, -1.0, 0.0], jumps=[2])
    assert len(p) == 4 and p.jumps == [2]
    assert p.jump_quadratic_variation() == 4.0
    assert p.continuous_quadratic_variation() == 2.0
    assert math.isclose(p.total_variation(), 4.0)

    absf = lt.DcFunction.half_abs(0.0)
    assert absf.jf_increment(1.0, -1.0) == 1.0
    for f in lt.DcFunction.suite() + [absf.mollify(4)]:
        (r,) = lt.tanaka_residual(p, f, 1.0)
        assert abs(r) < 1e-9, (f.name, r)

    spec = json.dumps({"kind": "jump_diffusion", "sigma": 1.0, "lambda": 5.0, "steps": 4096, "seed": 3})
    path = lt.generate(spec)
    assert path.values == lt.generate(spec).values
    qv = lt.quadratic_variation(path, levels=[4, 8])
    assert sorted(qv) == [4, 8]

    grid = lt.LevelGrid.for_path(path, 0.01, 0.5)
    k = lt.crossing_time(path, grid, 1.0)
    j = lt.jump_field(path, grid, 1.0)
    mass = sum(a - b for a, b in zip(k, j)) * grid.spacing * 2.0
    assert math.isclose(mass, path.continuous_quadratic_variation(), rel_tol=1e-9)

    occ = lt.occupation_local_time(path, grid, 1.0, 0.05)
    classical, floored = lt.classical_local_time(path, grid, 1.0)
    assert len(occ) == len(classical) == len(grid)
    assert min(classical) >= 0.0 and floored >= 0.0

    xe, phi = lt.skorokhod_map(path, 0.2)
    assert phi[0] == 0.0 and max(abs(v) for v in phi) <= 0.1
    tally = lt.count_crossings(path, 0.0, 0.2, 1.0)
    assert tally["up"] >= 0 and abs(tally["up"] - tally["down"]) <= 1
    fields = lt.interval_crossing_local_time(path, grid, 1.0, [0.4, 0.2])
    assert len(fields) == 2
    assert lt.q_statistic(path, grid, 1.0, 0.2) >= 0.0

    config = json.dumps({
        "generator": {"kind": "brownian", "steps": 1024},
        "estimator": "K_pi",
        "ladder": [4, 6, 8],
        "paths": 20,
        "seed": 1,
    })
    rows = lt.run_experiment(config)
    assert [r["level"] for r in rows] == [4.0, 6.0, 8.0]

    try:
        lt.Path([0.0, 0.0], [1.0, 2.0])
    except ValueError:
        pass
    else:
        raise AssertionError("non-increasing times accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
