# SPDX-License-Identifier: MIT

import json

import numpy as np
import pytest

from covop import FrequencyGrid, Signal, impulse
from covop._wire import (
    dataset_from_json,
    dataset_to_json,
    dumps,
    edges_to_csv,
    fit_to_json,
    frequency_signal_to_json,
    kernel_from_json,
    kernel_to_json,
    parse_region,
    phi_from_json,
    signal_from_json,
    spectrum_to_csv,
    table_to_json,
)
from covop.calculus import EVERYWHERE, ClusterRegion, DiscRegion
from covop.exceptions import WireFormatError
from covop.learn import Dataset, FitResult
from covop.spectral import spectrum_locus
from covop.transform import dtft, symbol


DELAY = '{"n": 1, "taps": [{"t": 1, "m": [[[1, 0]]]}]}'


class TestKernel:
    def test_parse(self):
        """
        Taps are lists of complex pairs per row.
        """
        k = kernel_from_json(
            '{"n": 2, "taps": [{"t": -1, "m": [[[0.4, 1], [0, 0]],'
            " [[0, 0], [0.4, 0]]]}]}"
        )

        assert (-1,) == k.offsets
        assert np.array_equal([[0.4 + 1j, 0], [0, 0.4]], k.tap(-1))

    def test_example_survives_serialization(self, kernel):
        """
        Written kernels parse back to the same taps.
        """
        k = kernel_from_json(kernel_to_json(kernel))

        assert kernel.offsets == k.offsets
        assert np.array_equal(kernel.matrices, k.matrices)

    @pytest.mark.parametrize(
        "text",
        [
            "{",
            '{"n": 0, "taps": []}',
            '{"n": 1, "taps": [], "extra": 1}',
            '{"n": 1, "taps": [{"t": 0, "m": [[1]]}]}',
            '{"n": 2, "taps": [{"t": 0, "m": [[[1, 0]], [[1, 0], [0, 0]]]}]}',
            '{"n": 2, "taps": [{"t": 0, "m": [[[1, 0]]]}]}',
            '{"n": 1, "taps": [{"t": 0, "m": [[[1, 0]]]},'
            ' {"t": 0, "m": [[[2, 0]]]}]}',
        ],
        ids=[
            "malformed",
            "no-nodes",
            "unknown-field",
            "real-entry",
            "ragged",
            "wrong-size",
            "duplicate-offset",
        ],
    )
    def test_invalid(self, text):
        """
        Every kind of invalid kernel is a WireFormatError.
        """
        with pytest.raises(WireFormatError):
            kernel_from_json(text)

    def test_delay(self):
        """
        The unit delay parses.
        """
        assert (1,) == kernel_from_json(DELAY).offsets


class TestSignal:
    def test_parse(self):
        """
        Samples are rows of complex pairs.
        """
        x = signal_from_json(
            '{"n": 2, "start": -1, "samples": [[[1, 0], [0, 2]]]}'
        )

        assert -1 == x.start
        assert np.array_equal([[1, 2j]], x.samples)

    def test_empty(self):
        """
        No samples is the zero signal.
        """
        x = signal_from_json('{"n": 3, "start": 4, "samples": []}')

        assert 0 == len(x)
        assert 3 == x.n

    def test_width_checked(self):
        """
        Rows must have n entries.
        """
        with pytest.raises(WireFormatError):
            signal_from_json('{"n": 2, "start": 0, "samples": [[[1, 0]]]}')


class TestPhi:
    def test_pieces(self):
        """
        Pieces come with regions, families, and parameters.
        """
        phi = phi_from_json(
            """
            {"pieces": [
              {"region": "cluster:0", "family": "exp_affine",
               "params": [[0.5, 0], 1]},
              {"region": {"disc": {"center": [1, -1], "radius": 0.5}},
               "family": "gaussian", "params": [[1, -1], 0.25]},
              {"family": "poly", "params": [0, 1]}
            ]}
            """
        )

        assert [ClusterRegion(0), DiscRegion(1 - 1j, 0.5), EVERYWHERE] == [
            p.region for p in phi.pieces
        ]
        assert ["exp_affine", "gaussian", "poly"] == [
            p.family for p in phi.pieces
        ]
        assert not phi.holomorphic
        assert (1 - 1j, 0.25) == phi.pieces[1].params

    def test_sqrt_shift(self):
        """
        The shifted root takes one parameter.
        """
        phi = phi_from_json(
            '{"pieces": [{"family": "sqrt_shift", "params": [-1]}]}'
        )

        assert np.isclose(2, phi(3))

    @pytest.mark.parametrize(
        "text",
        [
            '{"pieces": []}',
            '{"pieces": [{"family": "rational", "params": [1]}]}',
            '{"pieces": [{"region": "blob", "family": "poly",'
            ' "params": [1]}]}',
            '{"pieces": [{"family": "gaussian", "params": [0, [1, 0]]}]}',
            '{"pieces": [{"family": "gaussian", "params": [0, -1.0]}]}',
            '{"pieces": [{"family": "sqrt_shift", "params": [1, 2]}]}',
            '{"pieces": [{"family": "exp_affine", "params": []}]}',
        ],
        ids=[
            "no-pieces",
            "unknown-family",
            "unknown-region",
            "complex-width",
            "negative-width",
            "too-many-params",
            "too-few-params",
        ],
    )
    def test_invalid(self, text):
        """
        Invalid functions are WireFormatErrors.
        """
        with pytest.raises(WireFormatError):
            phi_from_json(text)

    @pytest.mark.parametrize("selector", ["cluster:", "cluster:-1", "disc"])
    def test_bad_region(self, selector):
        """
        Region selectors are all, cluster:<i>, or a disc object.
        """
        with pytest.raises(WireFormatError):
            parse_region(selector)


class TestDataset:
    def test_survives_serialization(self, rng):
        """
        Written datasets parse back to the same signals and seed.
        """
        x = Signal(2, -2, rng.standard_normal((3, 2)))
        data = Dataset([(x, impulse(2, t=5))], seed=3)

        parsed = dataset_from_json(dataset_to_json(data))

        assert 3 == parsed.seed
        [(u, v)] = parsed.pairs
        assert -2 == u.start
        assert np.array_equal(x.samples, u.samples)
        assert 5 == v.start

    def test_needs_pairs(self):
        """
        Datasets without pairs are invalid.
        """
        with pytest.raises(WireFormatError):
            dataset_from_json('{"pairs": []}')

    def test_node_counts(self):
        """
        All signals must have the same node count.
        """
        x = '{"n": 1, "start": 0, "samples": [[[1, 0]]]}'
        y = '{"n": 2, "start": 0, "samples": [[[1, 0], [0, 0]]]}'

        with pytest.raises(WireFormatError):
            dataset_from_json(f'{{"pairs": [{{"x": {x}, "y": {y}}}]}}')


class TestDumps:
    def test_layout(self):
        """
        Objects are indented, flat lists stay on one line, and floats have
        17 significant digits.
        """
        text = dumps({"a": [1, 2.5], "b": None, "c": True, "d": [[0.1], []]})

        assert (
            "{\n"
            '  "a": [1, 2.5000000000000000e+00],\n'
            '  "b": null,\n'
            '  "c": true,\n'
            '  "d": [\n'
            "    [1.0000000000000001e-01],\n"
            "    []\n"
            "  ]\n"
            "}"
        ) == text

    def test_non_finite(self):
        """
        NaN and infinities are written as null.
        """
        assert "[null, null]" == dumps([np.nan, -np.inf])

    def test_valid_json(self, kernel):
        """
        Output is standard JSON.
        """
        assert 4 == len(json.loads(kernel_to_json(kernel))["taps"])

    def test_unknown_type(self):
        """
        Only JSON-like values can be written.
        """
        with pytest.raises(TypeError):
            dumps(object())

    def test_fit(self):
        """
        Fit results list their parameters, trace, and seed.
        """
        result = FitResult([1.0, 2.0], 0.5, [2.0, 0.5], True)

        obj = json.loads(fit_to_json(result, "poly1", 4))

        assert {
            "family": "poly1",
            "theta": [1.0, 2.0],
            "loss": 0.5,
            "trace": [2.0, 0.5],
            "converged": True,
            "iterations": 1,
            "seed": 4,
        } == obj


class TestSpectrumCsv:
    def test_rows(self, branches):
        """
        One row per grid point and branch after the header.
        """
        lines = spectrum_to_csv(spectrum_locus(branches)).splitlines()

        assert "omega,branch,re,im" == lines[0]
        assert 1 + 2 * 256 == len(lines)
        assert lines[1].startswith("0.0000000000000000e+00,0,6.828427")
        assert lines[2].startswith("0.0000000000000000e+00,1,1.171572")


class TestEdgesCsv:
    def test_delay(self):
        """
        The unit delay is a single self-loop at lag one.
        """
        lines = edges_to_csv(kernel_from_json(DELAY)).splitlines()

        assert [
            "lag,source,target,re,im",
            "1,0,0,1.0000000000000000e+00,0.0000000000000000e+00",
        ] == lines

    def test_example(self, kernel):
        """
        Entry (i, j) of a tap is an edge from node j to node i.
        """
        rows = [
            line.split(",")
            for line in edges_to_csv(kernel).splitlines()[1:]
        ]

        assert [
            ("0", "1", "0"),
            ("0", "0", "1"),
            ("1", "0", "0"),
            ("1", "1", "1"),
            ("2", "0", "1"),
            ("3", "1", "0"),
        ] == [tuple(r[:3]) for r in rows]
        assert 0.8 == float(rows[4][3])


class TestFrequencyJson:
    def test_table(self, kernel):
        """
        Symbols list one tap per grid point with its frequency.
        """
        obj = json.loads(table_to_json(symbol(kernel, FrequencyGrid(8))))

        assert 2 == obj["n"]
        assert 8 == len(obj["taps"])
        assert [0.0, 0.125] == [t["omega"] for t in obj["taps"][:2]]
        assert [0.4, 0.0] == obj["taps"][0]["m"][0][0]

    def test_frequency_signal(self):
        """
        Transformed signals share the layout of symbols.
        """
        xhat = dtft(impulse(2, node=1), FrequencyGrid(8))

        obj = json.loads(frequency_signal_to_json(xhat))

        assert 2 == obj["n"]
        assert 8 == len(obj["taps"])
        assert {"omega": 0.0, "v": [[0.0, 0.0], [1.0, 0.0]]} == obj["taps"][0]
