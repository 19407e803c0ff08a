import numpy as np
import pytest

from roset import model
from roset.errors import InvalidArgumentError


def test_dataset_validation():
    d = model.Dataset([[1.0, 2.0], [3.0, 4.0]])
    assert d.n == 2 and d.m == 2
    with pytest.raises(InvalidArgumentError):
        model.Dataset([[np.nan, 1.0]])
    with pytest.raises(InvalidArgumentError):
        model.Dataset(np.empty((0, 3)))


def test_dataset_immutable():
    d = model.Dataset([[1.0, 2.0]])
    with pytest.raises(ValueError):
        d.points[0, 0] = 9.0


def test_split_all_rows_phase1():
    d = model.Dataset(np.arange(20.0).reshape(10, 2))
    sp = model.split_data(d, 10, seed=7)
    assert sp.phase2.n == 0
    assert np.array_equal(sp.phase1.points, d.points)


def test_split_empty_phase1():
    d = model.Dataset(np.arange(20.0).reshape(10, 2))
    sp = model.split_data(d, 0, seed=7)
    assert sp.phase1.n == 0
    assert np.array_equal(sp.phase2.points, d.points)


def test_split_deterministic():
    d = model.Dataset(np.random.default_rng(0).normal(size=(120, 3)))
    a = model.split_data(d, 60, seed=1)
    b = model.split_data(d, 60, seed=1)
    assert np.array_equal(a.phase1.points, b.phase1.points)
    assert np.array_equal(a.phase2.points, b.phase2.points)


def test_split_is_partition_and_preserves_order():
    rng = np.random.default_rng(3)
    d = model.Dataset(rng.normal(size=(37, 2)))
    for seed in (0, 1, 99):
        sp = model.split_data(d, 17, seed=seed)
        merged = np.vstack([sp.phase1.points, sp.phase2.points])
        assert sorted(map(tuple, merged)) == sorted(map(tuple, d.points))
        # source order within each part: rows appear in increasing source index
        def source_positions(part):
            pos = []
            for row in part.points:
                matches = np.where((d.points == row).all(axis=1))[0]
                pos.append(matches[0])
            return pos
        assert source_positions(sp.phase1) == sorted(source_positions(sp.phase1))
        assert source_positions(sp.phase2) == sorted(source_positions(sp.phase2))


def test_split_n1_out_of_range():
    d = model.Dataset(np.zeros((5, 1)) + np.arange(5)[:, None])
    with pytest.raises(InvalidArgumentError):
        model.split_data(d, 6, seed=0)


def test_ccp_spec_validation():
    spec = model.CcpSpec(
        objective=[-1.0, -2.0],
        family=model.SingleLinear(),
        rhs=[10.0],
        epsilon=0.05,
        delta=0.05,
    )
    assert spec.d == 2 and spec.data_dim == 2
    with pytest.raises(InvalidArgumentError):
        model.CcpSpec([-1.0], model.SingleLinear(), [1.0], epsilon=0.0, delta=0.5)
    with pytest.raises(InvalidArgumentError):
        model.CcpSpec([-1.0], model.SingleLinear(), [1.0], epsilon=0.5, delta=1.0)
    with pytest.raises(InvalidArgumentError):
        model.CcpSpec([-1.0, 0.0], model.JointLinear(l=3), [1.0, 2.0], epsilon=0.1, delta=0.1)


def test_family_data_dims():
    assert model.SingleLinear().data_dim(4) == 4
    assert model.JointLinear(l=3).data_dim(4) == 12
    assert model.Quadratic(q=4).data_dim(4) == 21
    assert model.Semidefinite(p=3).data_dim(2) == 18


def test_spec_json_roundtrip_exact():
    eps = 0.05000000000000001
    delta = 1e-5
    spec = model.CcpSpec(
        objective=[-1.25, 3.0, 0.1],
        family=model.JointLinear(l=2),
        rhs=[10.0, -0.5],
        epsilon=eps,
        delta=delta,
        det=model.DetConstraints(a_ub=[[-1.0, 0.0, 0.0]], b_ub=[0.0]),
    )
    back = model.spec_from_json(model.spec_to_json(spec))
    assert back.epsilon == eps and back.delta == delta
    assert np.array_equal(back.objective, spec.objective)
    assert np.array_equal(back.rhs, spec.rhs)
    assert isinstance(back.family, model.JointLinear) and back.family.l == 2
    assert np.array_equal(back.det.a_ub, spec.det.a_ub)


def test_spec_json_rejects_garbage():
    with pytest.raises(InvalidArgumentError):
        model.spec_from_json("{not json")
    with pytest.raises(InvalidArgumentError):
        model.spec_from_json('{"objective": [1.0]}')
    with pytest.raises(InvalidArgumentError):
        model.spec_from_json(
            '{"objective": [1.0], "family": {"kind": "mystery"}, "rhs": [0.0],'
            ' "epsilon": 0.1, "delta": 0.1}'
        )


def test_vectorize_round_trip():
    a = np.arange(6.0).reshape(2, 3)
    v = model.vectorize_matrix(a)
    assert v.tolist() == [0, 1, 2, 3, 4, 5]  # row concatenation
    assert np.array_equal(model.devectorize_matrix(v, 2, 3), a)


def test_quadratic_point_layout():
    q, d = 2, 3
    v = np.arange(float(q * d + d + 1))
    a, b, c = model.split_quadratic_point(v, q, d)
    assert a.shape == (2, 3) and np.array_equal(a[1], [3, 4, 5])
    assert np.array_equal(b, [6, 7, 8]) and c == 9.0


def test_semidefinite_point_layout():
    blocks = model.split_semidefinite_point(np.arange(2 * 2 * 2.0), d=2, p=2)
    assert len(blocks) == 2
    assert np.array_equal(blocks[0], [[0, 1], [2, 3]])
    assert np.array_equal(blocks[1], [[4, 5], [6, 7]])


def test_csv_roundtrip(tmp_path):
    pts = np.array([[1.0 / 3.0, 2.0], [1e-17, -4.5]])
    d = model.Dataset(pts)
    path = tmp_path / "data.csv"
    model.save_dataset_csv(d, path)
    back = model.load_dataset_csv(path)
    assert np.array_equal(back.points, pts)  # decimal repr round-trips doubles


def test_csv_header_skip(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("a,b\n1.0,2.0\n3.0,4.0\n")
    d = model.load_dataset_csv(path, skip_header=True)
    assert d.n == 2 and d.points[1, 1] == 4.0
    with pytest.raises(InvalidArgumentError):
        model.load_dataset_csv(path)
