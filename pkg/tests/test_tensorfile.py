"""Tests for the JSON and binary tensor file formats."""

import json

import numpy as np
import pytest

from tensorstat.errors import FileFormatError
from tensorstat.linalg import KroneckerFactors
from tensorstat.stats import SampleSet
from tensorstat.tensor_core import DenseTensor, Shape, SquareTensor, unmatricize
from tensorstat.tensorfile import (
    MAGIC,
    read_params,
    read_sample_set,
    read_tensor,
    tensor_from_obj,
    tensor_to_obj,
    write_params,
    write_sample_set,
    write_tensor,
)


def random_dense(rng, dims):
    return DenseTensor.from_array(rng.standard_normal(dims))


class TestJsonTensor:
    def test_dense_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(100)
        for dims in [(2,), (3, 2), (2, 2, 2)]:
            t = random_dense(rng, dims)
            path = str(tmp_path / "t.json")
            write_tensor(path, t)
            assert read_tensor(path) == t

    def test_square_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(101)
        x = unmatricize(rng.standard_normal((6, 6)), Shape((2, 3)))
        path = str(tmp_path / "s.json")
        write_tensor(path, x)
        back = read_tensor(path)
        assert isinstance(back, SquareTensor)
        assert back == x

    def test_obj_shapes(self):
        obj = tensor_to_obj(SquareTensor.identity((2, 2)))
        assert obj["kind"] == "square2d"
        assert obj["rowShape"] == [2, 2]
        assert obj["shape"] == [2, 2, 2, 2]
        assert len(obj["data"]) == 16

    def test_kind_defaults_to_tensor(self):
        t = tensor_from_obj({"shape": [2], "data": [1.0, 2.0]})
        assert isinstance(t, DenseTensor)

    def test_square2d_requires_row_shape(self):
        with pytest.raises(FileFormatError):
            tensor_from_obj({"kind": "square2d", "shape": [2, 2], "data": [1, 0, 0, 1]})

    def test_malformed_inputs(self, tmp_path):
        path = str(tmp_path / "bad.json")
        for payload in [
            b"not json at all",
            b"[1, 2, 3",
            json.dumps({"kind": "tensor", "shape": [2]}).encode(),
            json.dumps({"kind": "tensor", "shape": [2], "data": [1.0]}).encode(),
            json.dumps({"kind": "weird", "shape": [2], "data": [1.0, 2.0]}).encode(),
            json.dumps({"kind": "tensor", "shape": [0], "data": []}).encode(),
        ]:
            (tmp_path / "bad.json").write_bytes(payload)
            with pytest.raises(FileFormatError):
                read_tensor(path)

    def test_17_digit_round_trip(self, tmp_path):
        # shortest round-trip decimals keep awkward doubles bit-exact
        values = [1 / 3, np.pi, 1e-300, -2.2250738585072014e-308, 0.1 + 0.2]
        t = DenseTensor(values, (5,))
        path = str(tmp_path / "v.json")
        write_tensor(path, t)
        np.testing.assert_array_equal(read_tensor(path).data, t.data)


class TestBinaryTensor:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(102)
        t = random_dense(rng, (3, 2, 2))
        path = str(tmp_path / "t.bin")
        write_tensor(path, t, binary=True)
        back = read_tensor(path)
        assert back == t

    def test_square_round_trips_as_even_order_dense(self, tmp_path):
        rng = np.random.default_rng(103)
        x = unmatricize(rng.standard_normal((4, 4)), Shape((2, 2)))
        path = str(tmp_path / "s.bin")
        write_tensor(path, x, binary=True)
        back = read_tensor(path)
        assert isinstance(back, DenseTensor)
        assert back.shape == Shape((2, 2, 2, 2))
        np.testing.assert_array_equal(back.data, x.data)

    def test_magic_detection(self, tmp_path):
        path = tmp_path / "t.bin"
        t = DenseTensor([1.0, 2.0], (2,))
        write_tensor(str(path), t, binary=True)
        assert path.read_bytes().startswith(MAGIC)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "t.bin"
        write_tensor(str(path), DenseTensor([1.0, 2.0], (2,)), binary=True)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(FileFormatError):
            read_tensor(str(path))

    def test_trailing_bytes(self, tmp_path):
        path = tmp_path / "t.bin"
        write_tensor(str(path), DenseTensor([1.0, 2.0], (2,)), binary=True)
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(FileFormatError):
            read_tensor(str(path))


class TestSampleSets:
    def test_json_round_trip(self, tmp_path):
        rng = np.random.default_rng(104)
        s = SampleSet.from_observations([random_dense(rng, (2, 2)) for _ in range(5)])
        path = str(tmp_path / "s.json")
        write_sample_set(path, s, seed=42)
        back = read_sample_set(path)
        assert len(back) == 5
        np.testing.assert_array_equal(back.to_matrix(), s.to_matrix())
        doc = json.loads((tmp_path / "s.json").read_text())
        assert doc["seed"] == 42
        assert doc["count"] == 5

    def test_bare_array_accepted(self, tmp_path):
        objs = [tensor_to_obj(DenseTensor([float(k), 0.0], (2,))) for k in range(3)]
        path = tmp_path / "arr.json"
        path.write_text(json.dumps(objs))
        s = read_sample_set(str(path))
        assert len(s) == 3
        assert s.shape == Shape((2,))

    def test_empty_set_keeps_shape(self, tmp_path):
        s = SampleSet(shape=Shape((2, 2)), observations=())
        path = str(tmp_path / "empty.json")
        write_sample_set(path, s)
        back = read_sample_set(path)
        assert len(back) == 0
        assert back.shape == Shape((2, 2))

    def test_empty_bare_array_rejected(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text("[]")
        with pytest.raises(FileFormatError):
            read_sample_set(str(path))

    def test_binary_round_trip(self, tmp_path):
        rng = np.random.default_rng(105)
        s = SampleSet.from_observations([random_dense(rng, (3, 2)) for _ in range(7)])
        path = str(tmp_path / "s.bin")
        write_sample_set(path, s, binary=True)
        back = read_sample_set(path)
        np.testing.assert_array_equal(back.to_matrix(), s.to_matrix())
        assert back.shape == s.shape

    def test_binary_empty(self, tmp_path):
        s = SampleSet(shape=Shape((2,)), observations=())
        path = str(tmp_path / "s.bin")
        write_sample_set(path, s, binary=True)
        back = read_sample_set(path)
        assert len(back) == 0
        assert back.shape == Shape((2,))

    def test_square_observation_rejected(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps([tensor_to_obj(SquareTensor.identity((2,)))]))
        with pytest.raises(FileFormatError):
            read_sample_set(str(path))


class TestParamsFiles:
    def test_dense_round_trip(self, tmp_path):
        rng = np.random.default_rng(106)
        loc = random_dense(rng, (2, 2))
        m = rng.standard_normal((4, 4))
        scale = unmatricize(m @ m.T + np.eye(4), Shape((2, 2)))
        path = str(tmp_path / "p.json")
        write_params(path, loc, scale)
        loc2, scale2 = read_params(path)
        assert loc2 == loc
        assert scale2 == scale

    def test_kronecker_round_trip(self, tmp_path):
        loc = DenseTensor.zeros((2, 3))
        f = KroneckerFactors((np.diag([1.0, 2.0]), np.diag([1.0, 2.0, 3.0])))
        path = str(tmp_path / "p.json")
        write_params(path, loc, f)
        loc2, scale2 = read_params(path)
        assert loc2 == loc
        assert isinstance(scale2, KroneckerFactors)
        for a, b in zip(scale2.factors, f.factors):
            np.testing.assert_array_equal(a, b)

    def test_missing_fields(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps({"location": tensor_to_obj(DenseTensor([1.0], (1,)))}))
        with pytest.raises(FileFormatError):
            read_params(str(path))

    def test_scale_must_be_square_or_kronecker(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(
            json.dumps(
                {
                    "location": tensor_to_obj(DenseTensor([1.0], (1,))),
                    "scale": tensor_to_obj(DenseTensor([1.0], (1,))),
                }
            )
        )
        with pytest.raises(FileFormatError):
            read_params(str(path))
