"""Tests for src/codec.py: GF(2^q) fields, MDS generators, encoding and decoding."""
from fractions import Fraction
from itertools import combinations

import galois
import numpy as np
import pytest

from src.caching import RequestMatrix, SystemParams, place_caches
from src.codec import (
    Codeword,
    all_packet_labels,
    build_mds_generator,
    cached_symbols,
    codeword_from_hex,
    codeword_to_hex,
    decode_user,
    encode,
    field_degree_for,
    field_for,
    file_bytes_from_packets,
    load_packet_symbols,
    packet_symbols_from_bytes,
    random_linear_rate,
    random_packet_symbols,
    round_trip,
)
from src.coloring import (
    Coloring,
    LocalColoringResult,
    exact_local_chromatic,
    local_chromatic_value,
)
from src.conflict_graph import build_conflict_graph
from src.demands import canonical_request_matrices
from src.utils.errors import (
    FieldTooSmallError,
    InvalidParamsError,
    MissingSymbolError,
    UndecodableError,
)


def _setup(n, m, M, L, requests, q=8, width=3, seed=1):
    params = SystemParams(n, m, M, L)
    placement = place_caches(params)
    F = RequestMatrix(m=m, requests=requests)
    g = build_conflict_graph(placement, F)
    col = exact_local_chromatic(g, packet_consistent=True)
    gen = build_mds_generator(col.chi_l, col.palette_size, q)
    GF = field_for(q)
    symbols = random_packet_symbols(all_packet_labels(placement), GF, width, seed)
    return placement, F, g, col, gen, symbols


class TestField:
    def test_order(self):
        assert field_for(8).order == 256
        assert field_for(3).order == 8

    def test_minimal_irreducible_polynomial(self):
        assert field_for(8).irreducible_poly == galois.irreducible_poly(2, 8, method="min")

    def test_cached(self):
        assert field_for(8) is field_for(8)

    def test_invalid_degree(self):
        with pytest.raises(InvalidParamsError):
            field_for(1)
        with pytest.raises(InvalidParamsError):
            field_for(17)

    def test_addition_is_xor(self):
        GF = field_for(8)
        a, b = GF(0b1010_1100), GF(0b0110_0101)
        assert int(a + b) == 0b1010_1100 ^ 0b0110_0101

    def test_distributive(self):
        GF = field_for(8)
        a, b, c = (GF.Random(200, seed=s) for s in (1, 2, 3))
        assert np.array_equal(a * (b + c), a * b + a * c)

    def test_multiplicative_order(self):
        GF = field_for(8)
        x = GF.Random(200, low=1, seed=4)
        assert np.all(x ** (GF.order - 1) == 1)

    def test_degree_raised_for_palette(self):
        assert field_degree_for(3, 8) == 8
        assert field_degree_for(255, 8) == 8
        assert field_degree_for(256, 8) == 9
        assert field_degree_for(9, 3) == 4

    def test_degree_ceiling(self):
        with pytest.raises(FieldTooSmallError):
            field_degree_for(2 ** 16, 8)


class TestGenerator:
    def test_single_row(self):
        gen = build_mds_generator(1, 3, 8)
        assert gen.rows == 1
        assert gen.cols == 3
        assert np.all(gen.matrix != 0)

    def test_square_invertible(self):
        gen = build_mds_generator(4, 4, 8)
        assert np.linalg.matrix_rank(gen.matrix) == 4

    def test_every_pair_independent(self):
        gen = build_mds_generator(2, 4, 3)
        for cols in combinations(range(4), 2):
            assert np.linalg.matrix_rank(gen.matrix[:, list(cols)]) == 2

    @pytest.mark.parametrize("ncols", range(1, 7))
    def test_mds_minors_small(self, ncols):
        for k in range(1, ncols + 1):
            gen = build_mds_generator(k, ncols, 4)
            for cols in combinations(range(ncols), k):
                assert np.linalg.matrix_rank(gen.matrix[:, list(cols)]) == k

    def test_columns_are_evaluation_powers(self):
        gen = build_mds_generator(3, 5, 8)
        GF = field_for(8)
        alpha = GF(4)
        assert np.array_equal(gen.column(4), GF([1, int(alpha), int(alpha ** 2)]))

    def test_field_too_small(self):
        with pytest.raises(FieldTooSmallError, match="q >= 4"):
            build_mds_generator(2, 8, 3)

    def test_k_above_ncols(self):
        with pytest.raises(InvalidParamsError):
            build_mds_generator(3, 2, 8)

    def test_empty(self):
        gen = build_mds_generator(0, 0, 8)
        assert gen.matrix.shape == (0, 0)


class TestEncodeDecode:
    def test_two_user_exchange(self):
        placement, F, g, col, gen, symbols = _setup(2, 2, 1, 1, ((1,), (2,)))
        assert col.chi_l == 1
        X = encode(g, col, gen, symbols)
        assert X.length == 1
        assert X.rate == Fraction(1, 2)
        for u in (1, 2):
            decoded = decode_user(u, X, placement, cached_symbols(u, symbols), g, col, gen, F)
            assert len(decoded) == 1
            for label, row in decoded.items():
                assert np.array_equal(row, symbols[label])

    def test_single_packet(self):
        placement, F, g, col, gen, symbols = _setup(2, 2, 0, 1, ((1,), (1,)))
        X = encode(g, col, gen, symbols)
        assert X.length == 1
        (label,) = {v.rho for v in g.vertices}
        assert np.array_equal(X.symbols[0], gen.column(1)[0] * symbols[label])

    def test_empty_graph(self):
        placement, F, g, col, gen, symbols = _setup(2, 2, 2, 1, ((1,), (2,)))
        X = encode(g, col, gen, symbols)
        assert X.length == 0
        assert X.rate == 0
        assert decode_user(1, X, placement, cached_symbols(1, symbols), g, col, gen, F) == {}

    def test_base_demands_round_trip(self, base_placement):
        for F in canonical_request_matrices(3, 3, 2):
            result = round_trip(base_placement, F, q=8, width=20, seed=3)
            assert result.users_checked == 3
            assert result.packets_checked == 3 * 2 * 2
            assert result.rate == Fraction(result.codeword_length, 3)

    def test_codeword_length_is_chi_l(self):
        placement, F, g, col, gen, symbols = _setup(3, 3, 1, 2, ((1, 2), (2, 3), (1, 3)))
        assert encode(g, col, gen, symbols).length == col.chi_l

    def test_vertex_level_coloring_rejected(self, base_placement):
        F = RequestMatrix(m=3, requests=((1, 2),) * 3)
        g = build_conflict_graph(base_placement, F)
        colors = tuple(range(1, len(g) + 1))
        col = LocalColoringResult(Coloring(colors), local_chromatic_value(g, colors),
                                  optimal=False, packet_consistent=False)
        gen = build_mds_generator(col.chi_l, col.palette_size, 8)
        symbols = random_packet_symbols(all_packet_labels(base_placement), field_for(8), 1, 0)
        with pytest.raises(InvalidParamsError, match="packet-consistent"):
            encode(g, col, gen, symbols)

    def test_generator_shape_checked(self):
        placement, F, g, col, gen, symbols = _setup(2, 2, 0, 1, ((1,), (2,)))
        wrong = build_mds_generator(col.chi_l - 1, col.palette_size, 8)
        with pytest.raises(InvalidParamsError):
            encode(g, col, wrong, symbols)

    def test_missing_symbol(self):
        placement, F, g, col, gen, symbols = _setup(2, 2, 1, 1, ((1,), (2,)))
        partial = {k: v for k, v in symbols.items() if k.file != 1}
        with pytest.raises(MissingSymbolError, match="W1"):
            encode(g, col, gen, partial)

    def test_missing_cached_symbol(self):
        placement, F, g, col, gen, symbols = _setup(2, 2, 1, 1, ((1,), (2,)))
        X = encode(g, col, gen, symbols)
        with pytest.raises(MissingSymbolError):
            decode_user(1, X, placement, {}, g, col, gen, F)

    def test_short_codeword_undecodable(self):
        placement, F, g, col, _, symbols = _setup(2, 2, 0, 1, ((1,), (2,)))
        assert col.chi_l == 2
        short = build_mds_generator(1, 2, 8)
        X = Codeword(symbols=field_for(8).Zeros((1, 3)), q=8, packets_per_file=1)
        with pytest.raises(UndecodableError) as exc:
            decode_user(1, X, placement, cached_symbols(1, symbols), g, col, short, F)
        assert exc.value.user == 1
        assert len(exc.value.packets) == 1

    def test_invalid_user(self):
        placement, F, g, col, gen, symbols = _setup(2, 2, 1, 1, ((1,), (2,)))
        X = encode(g, col, gen, symbols)
        with pytest.raises(InvalidParamsError):
            decode_user(3, X, placement, {}, g, col, gen, F)


class TestRandomLinearRate:
    def test_full_memory(self):
        g = build_conflict_graph(place_caches(SystemParams(2, 2, 2, 1)),
                                 RequestMatrix(m=2, requests=((1,), (2,))))
        assert random_linear_rate(g) == 0

    def test_whole_library(self):
        params = SystemParams(2, 2, 1, 2)
        g = build_conflict_graph(place_caches(params),
                                 RequestMatrix(m=2, requests=((1, 2), (1, 2))))
        assert random_linear_rate(g, seed=5) == params.m - params.M

    def test_deterministic(self, base_placement):
        F = RequestMatrix(m=3, requests=((1, 2), (2, 3), (1, 3)))
        g = build_conflict_graph(base_placement, F)
        assert random_linear_rate(g, trials=5, seed=9) == random_linear_rate(g, trials=5, seed=9)

    def test_needs_packet_identities(self, path_graph):
        with pytest.raises(InvalidParamsError):
            random_linear_rate(path_graph)


class TestSymbolIO:
    def test_bytes_round_trip(self, base_params):
        GF = field_for(8)
        data = b"coded multicast payload"
        chunks = packet_symbols_from_bytes(data, 2, base_params, GF)
        assert len(chunks) == 3
        assert len({row.shape[0] for row in chunks.values()}) == 1
        assert file_bytes_from_packets(chunks, 2, base_params, GF, len(data)) == data

    def test_bytes_round_trip_odd_degree(self, base_params):
        GF = field_for(5)
        data = bytes(range(40))
        chunks = packet_symbols_from_bytes(data, 1, base_params, GF)
        assert file_bytes_from_packets(chunks, 1, base_params, GF, len(data)) == data

    def test_load_files_and_decode(self, tmp_path):
        params = SystemParams(2, 2, 1, 1)
        placement = place_caches(params)
        paths = []
        for f, payload in enumerate((b"first file", b"second, longer file"), start=1):
            path = tmp_path / f"file{f}.bin"
            path.write_bytes(payload)
            paths.append(str(path))
        GF = field_for(8)
        symbols = load_packet_symbols(paths, params, GF)
        F = RequestMatrix(m=2, requests=((2,), (1,)))
        g = build_conflict_graph(placement, F)
        col = exact_local_chromatic(g)
        gen = build_mds_generator(col.chi_l, col.palette_size, 8)
        X = encode(g, col, gen, symbols)
        decoded = decode_user(1, X, placement, cached_symbols(1, symbols), g, col, gen, F)
        full = {**cached_symbols(1, symbols), **decoded}
        assert file_bytes_from_packets(full, 2, params, GF, 19) == b"second, longer file"

    def test_load_wrong_file_count(self, tmp_path, base_params):
        with pytest.raises(InvalidParamsError):
            load_packet_symbols([str(tmp_path / "a")], base_params, field_for(8))

    def test_random_symbols_seeded(self, base_placement):
        GF = field_for(8)
        labels = all_packet_labels(base_placement)
        a = random_packet_symbols(labels, GF, 4, seed=2)
        b = random_packet_symbols(labels, GF, 4, seed=2)
        assert all(np.array_equal(a[k], b[k]) for k in labels)
        assert len(labels) == 9


class TestHexExport:
    def test_round_trip(self):
        placement, F, g, col, gen, symbols = _setup(3, 3, 1, 2, ((1, 2), (2, 3), (1, 3)))
        X = encode(g, col, gen, symbols)
        text = codeword_to_hex(X)
        assert text.startswith(f"# q=8 rows={X.length} width=3")
        back = codeword_from_hex(text)
        assert back.q == 8
        assert back.rate == X.rate
        assert np.array_equal(back.symbols, X.symbols)

    def test_fixed_width_digits(self):
        X = Codeword(symbols=field_for(8)([[1, 255]]), q=8, packets_per_file=1)
        assert codeword_to_hex(X).splitlines()[1] == "01 ff"

    def test_missing_header(self):
        with pytest.raises(InvalidParamsError):
            codeword_from_hex("01 02\n")

    def test_shape_mismatch(self):
        with pytest.raises(InvalidParamsError):
            codeword_from_hex("# q=8 rows=2 width=1\n01\n")
