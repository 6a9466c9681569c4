"""Dataset construction and CSV round-trip tests."""

import io

import numpy as np
import pytest

from synthfid.data import FidelityDataset, format_float, read_csv, write_csv
from synthfid.errors import DatasetError, ParseError


def _toy(n=5, d=1, t=2, seed=0):
    rng = np.random.default_rng(seed)
    return FidelityDataset(rng.uniform(size=(n, d)), rng.normal(size=(n, t)))


class TestDataset:
    def test_default_labels(self):
        ds = _toy(t=3)
        assert ds.labels == ("f0", "f1", "f2")

    def test_rejects_nan(self):
        y = np.ones((3, 1))
        y[1] = np.nan
        with pytest.raises(DatasetError):
            FidelityDataset(np.zeros((3, 1)), y)

    def test_rejects_single_point(self):
        with pytest.raises(DatasetError):
            FidelityDataset(np.zeros((1, 1)), np.zeros((1, 1)))

    def test_rejects_duplicate_labels(self):
        with pytest.raises(DatasetError):
            FidelityDataset(np.zeros((3, 1)), np.zeros((3, 2)), labels=("a", "a"))

    def test_arrays_immutable(self):
        ds = _toy()
        with pytest.raises(ValueError):
            ds.x[0, 0] = 1.0

    def test_with_column(self):
        ds = _toy(t=1)
        out = ds.with_column(np.arange(5.0), "synthetic")
        assert out.n_fidelities == 2
        assert out.labels == ("f0", "synthetic")
        np.testing.assert_array_equal(out.y[:, 0], ds.y[:, 0])


class TestCsv:
    def test_round_trip_byte_identical(self):
        ds = _toy(n=7, d=2, t=3, seed=4)
        buf1 = io.StringIO()
        write_csv(ds, buf1)
        parsed = read_csv(io.StringIO(buf1.getvalue()))
        buf2 = io.StringIO()
        write_csv(parsed, buf2)
        assert buf1.getvalue() == buf2.getvalue()
        np.testing.assert_array_equal(parsed.x, ds.x)
        np.testing.assert_array_equal(parsed.y, ds.y)

    def test_row_order_is_free(self):
        text = (
            "x0,fidelity,y\n"
            "0,1,10\n"
            "1,0,2\n"
            "0,0,1\n"
            "1,1,20\n"
        )
        ds = read_csv(io.StringIO(text))
        # x order follows first appearance: 0 then 1
        np.testing.assert_array_equal(ds.x[:, 0], [0.0, 1.0])
        np.testing.assert_array_equal(ds.y, [[1.0, 10.0], [2.0, 20.0]])

    def test_empty_file(self):
        with pytest.raises(ParseError) as err:
            read_csv(io.StringIO(""))
        assert err.value.line == 1

    def test_bad_header(self):
        with pytest.raises(ParseError):
            read_csv(io.StringIO("a,b,c\n1,2,3\n"))

    def test_bad_float_reports_line(self):
        text = "x0,fidelity,y\n0,0,1\nbroken,0,2\n0.5,0,1\n1,0,3\n"
        with pytest.raises(ParseError) as err:
            read_csv(io.StringIO(text))
        assert err.value.line == 3

    def test_block_design_violation(self):
        text = "x0,fidelity,y\n0,0,1\n1,0,2\n0,1,3\n"
        with pytest.raises(DatasetError):
            read_csv(io.StringIO(text))

    def test_duplicate_point_within_fidelity(self):
        text = "x0,fidelity,y\n0,0,1\n0,0,2\n"
        with pytest.raises(ParseError) as err:
            read_csv(io.StringIO(text))
        assert err.value.line == 3

    def test_non_contiguous_fidelities(self):
        text = "x0,fidelity,y\n0,0,1\n1,0,2\n0,2,3\n1,2,4\n"
        with pytest.raises(DatasetError):
            read_csv(io.StringIO(text))

    def test_float_formatting_17_digits(self):
        assert format_float(0.1) == "0.10000000000000001"
        assert format_float(1.0) == "1"
        assert float(format_float(np.pi)) == np.pi
