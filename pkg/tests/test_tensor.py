import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from latentrank.exceptions import EmptySelection, IndexOutOfRange, InvalidAxes, ShapeMismatch
from latentrank.tensor import (
    CategoricalDataset,
    ContingencyTensor,
    estimate_contingency,
    marginalize,
    matricize,
    read_dataset,
    unmatricize,
    write_dataset,
)


@st.composite
def datasets(draw, max_vars=4, max_rows=60):
    k = draw(st.integers(1, max_vars))
    cards = draw(st.lists(st.integers(2, 4), min_size=k, max_size=k))
    n = draw(st.integers(1, max_rows))
    cols = [draw(hnp.arrays(np.int64, n, elements=st.integers(0, c - 1))) for c in cards]
    names = tuple(f"X{i + 1}" for i in range(k))
    return CategoricalDataset(names=names, cards=tuple(cards), rows=np.column_stack(cols))


tensors = hnp.arrays(
    float,
    hnp.array_shapes(min_dims=2, max_dims=4, min_side=1, max_side=3),
    elements=st.floats(0, 1, allow_nan=False),
).map(ContingencyTensor)


class TestContingency:
    def test_counts(self):
        rows = np.array([[0, 1], [0, 1], [1, 0], [1, 1]])
        data = CategoricalDataset(("A", "B"), (2, 2), rows)
        t = estimate_contingency(data, [0, 1])
        np.testing.assert_allclose(t.values, [[0, 0.5], [0.25, 0.25]])
        assert t.n_samples == 4
        assert t.axis_vars == ("A", "B")

    @settings(max_examples=60, deadline=None)
    @given(datasets(), st.data())
    def test_matches_histogram(self, data, draw):
        vars = draw.draw(st.permutations(range(data.n_vars)))
        t = estimate_contingency(data, vars)
        edges = [np.arange(data.cards[v] + 1) - 0.5 for v in vars]
        hist, _ = np.histogramdd(data.rows[:, list(vars)], bins=edges)
        np.testing.assert_allclose(t.values, hist / data.n_samples)
        assert t.total() == pytest.approx(1.0)

    def test_errors(self):
        data = CategoricalDataset(("A", "B"), (2, 2), np.zeros((3, 2), dtype=np.int64))
        with pytest.raises(EmptySelection):
            estimate_contingency(data, [])
        with pytest.raises(IndexOutOfRange):
            estimate_contingency(data, [0, 5])
        with pytest.raises(InvalidAxes):
            estimate_contingency(data, [1, 1])

    def test_rejects_out_of_range_codes(self):
        with pytest.raises(IndexOutOfRange):
            CategoricalDataset(("A",), (2,), np.array([[0], [2]]))


class TestReshape:
    @settings(max_examples=80, deadline=None)
    @given(tensors, st.data())
    def test_matricize_roundtrip(self, t, data):
        k = data.draw(st.integers(1, t.ndim - 1))
        rows = data.draw(st.lists(st.integers(0, t.ndim - 1), min_size=k, max_size=k, unique=True))
        m = matricize(t, rows)
        assert m.ndim == 2
        back = unmatricize(m, rows, t.dims)
        np.testing.assert_array_equal(back.values, t.values)

    @settings(max_examples=60, deadline=None)
    @given(tensors, st.data())
    def test_marginalize_total(self, t, data):
        keep = data.draw(st.lists(st.integers(0, t.ndim - 1), min_size=1, max_size=t.ndim, unique=True))
        m = marginalize(t, keep)
        assert m.total() == pytest.approx(t.total())
        assert m.dims == tuple(t.dims[a] for a in sorted(keep))

    def test_matricize_needs_strict_subset(self):
        t = ContingencyTensor(np.ones((2, 2)))
        with pytest.raises(InvalidAxes):
            matricize(t, [0, 1])

    def test_unmatricize_size_check(self):
        with pytest.raises(ShapeMismatch):
            unmatricize(ContingencyTensor(np.ones((2, 2))), [0], (2, 3))


@settings(max_examples=20, deadline=None)
@given(datasets())
def test_csv_roundtrip(tmp_path_factory, data):
    path = tmp_path_factory.mktemp("csv") / "d.csv"
    write_dataset(data, path)
    back = read_dataset(path, cards=data.cards)
    assert back.names == data.names
    np.testing.assert_array_equal(back.rows, data.rows)
