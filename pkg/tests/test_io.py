import numpy as np
import pytest
from hypothesis import given, strategies as st

from toposense.io import read_table, write_amplitudes, write_table, write_trace


def test_table_round_trip(tmp_path):
    path = write_table(tmp_path / "t.csv", ["t", "flag", "name", "v"],
                       [[0.0, 0.5], [True, False], ["a", "b"], [np.nan, 1e-300]])
    tab = read_table(path)
    np.testing.assert_array_equal(tab["t"], [0.0, 0.5])
    np.testing.assert_array_equal(tab["flag"], [1, 0])
    assert list(tab["name"]) == ["a", "b"]
    assert np.isnan(tab["v"][0]) and tab["v"][1] == 1e-300


def test_ragged_columns_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_table(tmp_path / "t.csv", ["a", "b"], [[1, 2], [3]])


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_floats_survive_exactly(tmp_path_factory, values):
    path = write_trace(tmp_path_factory.mktemp("io") / "trace.csv", range(len(values)), values)
    np.testing.assert_array_equal(read_table(path)["p1"], values)


def test_amplitude_labels(tmp_path):
    tab = read_table(write_amplitudes(tmp_path / "a.csv", np.ones(4), -np.ones(4)))
    assert list(tab["label"]) == ["emitter", "site-1", "site-2", "site-3"]
    np.testing.assert_array_equal(tab["amplitude_minus"], -1.0)
