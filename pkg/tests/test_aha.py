import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from rasptrans.aha import (
    ActivationSeq, Attn, DecodeError, DimensionMismatch, Ffn, TransformerSpec, apply_layer,
    build_pe, decode_output, decode_symbols, encode_input, pe_values, run, spec_from_json,
    spec_to_json, transduce,
)
from rasptrans.emit import compile as emit_compile
from rasptrans.fixtures import corpus_program


def with_cols(u: ActivationSeq, extra: dict) -> ActivationSeq:
    """Append named columns given as lists over positions -1..n-1."""
    layout = u.layout + tuple(extra)
    return ActivationSeq(u.n, layout, list(u.cols) + [list(map(mpq, v)) for v in extra.values()])


# ------------------------------------------------------------ position encoding

def test_pe_mode_b_position_zero():  # [PAPER] n=4, position 0
    u = build_pe(4, "B")
    assert [u.at(0, k) for k in ("pos", "posq", "posi", "default", "zero")] == [0, 0, mpq(1, 2), 0, 1]


@pytest.mark.parametrize("n", [1, 4, 9])
def test_pe_default_position(n):  # [PAPER] pos(-1) = -1/n, default = 1
    u = build_pe(n, "B")
    assert u.at(-1, "pos") == mpq(-1, n) and u.at(-1, "default") == 1


def test_pe_mode_c():  # [TRIVIAL] 1/(2+2)^2
    u = build_pe(4, "C")
    assert u.layout == ("pos", "posiq")
    assert u.at(2, "posiq") == mpq(1, 16)


def test_pe_rejects_empty():
    with pytest.raises(ValueError):
        build_pe(0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 40), st.data())
def test_pe_formulas(n, data):
    i = data.draw(st.integers(-1, n - 1))
    v = pe_values(i, n, "B")
    assert v["posq"] == v["pos"] ** 2
    assert v["posi"] * (i + 2) == 1


# ------------------------------------------------------------ layers

def test_zero_ffn_is_identity():  # [TRIVIAL]
    u = build_pe(5)
    assert apply_layer(Ffn((), (), ()), u).cols == u.cols


def test_ffn_applies_at_default_position():
    u = with_cols(build_pe(3), {"x": [0] * 4})
    x = u.index("x")
    v = apply_layer(Ffn(((),), (mpq(1),), ((x, ((0, mpq(2)),)),)), u)
    assert v.column(x) == [2, 2, 2] and v.at(-1, x) == 2


def test_ffn_relu():
    u = with_cols(build_pe(4), {"x": [0] * 5})
    x, pos = u.index("x"), u.index("pos")
    # x += relu(pos - 1/2)
    v = apply_layer(Ffn((((pos, mpq(1)),),), (mpq(-1, 2),), ((x, ((0, mpq(1)),)),)), u)
    assert v.column(x) == [0, 0, 0, mpq(1, 4)]


def test_nonstrict_mean():  # [PAPER] zero score, nonstrict mask -> prefix mean
    u = with_cols(build_pe(6), {"k": [0, 3, 1, 4, 1, 5, 9], "o": [0] * 7})
    k, o = u.index("k"), u.index("o")
    v = apply_layer(Attn((), (), ((o, ((k, mpq(1)),)),), "nonstrict_future"), u)
    vals = [0, 3, 1, 4, 1, 5, 9]
    for i in range(-1, 6):
        assert v.at(i, o) == mpq(sum(vals[: i + 2]), i + 2)  # [DERIVED] arithmetic mean


def test_strict_mask_keeps_default_position():  # [PAPER] nowhere to attend at -1
    u = with_cols(build_pe(4), {"o": [7] * 5})
    o = u.index("o")
    v = apply_layer(Attn((), (), ((o, ((u.index("pos"), mpq(1)),)),), "strict_future"), u)
    assert v.at(-1, o) == 7
    assert v.at(0, o) == 7 + mpq(-1, 4)


def test_run_empty_is_identity():  # [TRIVIAL]
    u = build_pe(3)
    spec = TransformerSpec(u.d, u.layout, [])
    assert run(spec, u).cols == u.cols


def test_dimension_mismatch():
    u = build_pe(3)
    with pytest.raises(DimensionMismatch):
        apply_layer(Ffn((((99, mpq(1)),),), (mpq(0),), ()), u)
    with pytest.raises(DimensionMismatch):
        apply_layer(Attn((((0, mpq(1)),),), (), ()), u)
    with pytest.raises(DimensionMismatch):
        TransformerSpec(3, ("a", "b"), [])


# ------------------------------------------------------------ lookup (mode B)

@pytest.mark.parametrize("n", [1, 5, 9])
def test_lookup_layer(n):  # [PAPER] u'_i[t] = u_{k_i}[s]
    ks = [(3 * i + 1) % n for i in range(n)]
    src = [i * i + 1 for i in range(-1, n)]
    u = with_cols(build_pe(n), {"one": [1] * (n + 1), "r": [0] + [mpq(k, n) for k in ks],
                                "s": src, "t": [0] * (n + 1)})
    c = u.index
    layer = Attn((((c("r"), mpq(2)),), ((c("one"), mpq(-1)),)),
                 (((c("pos"), mpq(1)),), ((c("posq"), mpq(1)),)),
                 ((c("t"), ((c("s"), mpq(1)),)),))
    v = apply_layer(layer, u)
    for i in range(n):
        assert v.at(i, "t") == src[ks[i] + 1]


def test_lookup_clamps_past_end():  # k_i >= n picks position n-1
    n = 4
    u = with_cols(build_pe(n), {"one": [1] * 5, "r": [mpq(7, n)] * 5,
                                "s": [10, 11, 12, 13, 14], "t": [0] * 5})
    c = u.index
    layer = Attn((((c("r"), mpq(2)),), ((c("one"), mpq(-1)),)),
                 (((c("pos"), mpq(1)),), ((c("posq"), mpq(1)),)),
                 ((c("t"), ((c("s"), mpq(1)),)),))
    assert apply_layer(layer, u).column("t") == [14] * 4


# ------------------------------------------------------------ score maximization

def test_quadratic_maximization():  # [PAPER] gap >= 1 with f_q(x) = 2qx - x^2
    for q in range(65):
        f = [2 * q * x - x * x for x in range(65)]
        best = max(f)
        assert [x for x in range(65) if f[x] == best] == [q]
        assert all(f[q] - f[x] >= 1 for x in range(65) if x != q)


def test_quadratic_gap_in_runtime_scores():
    # the lookup scores recorded by the runtime are f_q(j) / n^2
    n = 9
    ks = [(2 * i + 3) % n for i in range(n)]
    u = with_cols(build_pe(n), {"one": [1] * (n + 1), "r": [0] + [mpq(k, n) for k in ks]})
    c = u.index
    layer = Attn((((c("r"), mpq(2)),), ((c("one"), mpq(-1)),)),
                 (((c("pos"), mpq(1)),), ((c("posq"), mpq(1)),)), ())
    rec = []
    apply_layer(layer, u, rec)
    scores = rec[0][1]
    for i in range(n):
        for j in range(-1, n):
            assert scores[(i, j)] == mpq(2 * ks[i] * j - j * j, n * n)


def _inv_sq(q, x, n):
    return mpq(2, n * (x + 2)) - mpq(q + 2, n * (x + 2) ** 2)


@pytest.mark.parametrize("n", [8, 64])
def test_inverse_square_maximization(n):  # [PAPER] unique argmax at x = q over x >= -1
    xs = range(-1, 33)
    for q in xs:
        f = {x: _inv_sq(q, x, n) for x in xs}
        best = max(f.values())
        assert [x for x in xs if f[x] == best] == [q]
        for x in xs:  # [DERIVED] closed form of the gap
            assert f[q] - f[x] == mpq((x - q) ** 2, n * (q + 2) * (x + 2) ** 2)


def test_neighbour_difference_identity():  # [PAPER] 1/((i+2)^2-1) = (1/(i+1) - 1/(i+3)) / 2
    for i in range(65):
        assert mpq(1, (i + 2) ** 2 - 1) == (mpq(1, i + 1) - mpq(1, i + 3)) / 2
    assert mpq(1, 15) == (mpq(1, 3) - mpq(1, 5)) / 2


# ------------------------------------------------------------ encode / decode

@pytest.fixture(scope="module")
def ident_spec():
    from rasptrans.lower import unpack_packed
    return emit_compile(unpack_packed(corpus_program("identity")), "B")


def test_encode_one_hot(ident_spec):  # [TRIVIAL]
    u = encode_input("ab", ident_spec, 4)
    c = ident_spec.input_coords
    assert u.at(1, c["b"]) == 1 and u.at(1, c["a"]) == 0
    assert all(u.at(-1, col) == 0 for col in c.values())


def test_encode_needs_room(ident_spec):
    with pytest.raises(ValueError):
        encode_input("ab", ident_spec, 2)


def test_decode_copied_block(ident_spec):  # [TRIVIAL]
    u = encode_input("ab", ident_spec, 4)
    coords = ident_spec.input_coords
    assert decode_symbols(u, coords)[:2] == ["a", "b"]


def test_decode_rejects_non_one_hot(ident_spec):
    u = encode_input("ab", ident_spec, 4)
    a, b = ident_spec.input_coords["a"], ident_spec.input_coords["b"]
    u = u.with_columns({b: [mpq(0), mpq(1), mpq(1), mpq(0), mpq(0)]})
    with pytest.raises(DecodeError):
        decode_symbols(u, {"a": a, "b": b})
    u = u.with_columns({a: [mpq(0), mpq(1, 2), mpq(0), mpq(0), mpq(0)]})
    with pytest.raises(DecodeError):
        decode_symbols(u, {"a": a, "b": b})


def test_decode_output_rejects_gap():
    spec = TransformerSpec(2, ("out=a", "out=_"), [], output_coords={"a": 0, "_": 1}, gamma=("a",))
    u = ActivationSeq(3, spec.layout, [[mpq(x) for x in col]
                                       for col in ([0, 1, 0, 1], [0, 0, 1, 0])])
    with pytest.raises(DecodeError):
        decode_output(u, spec)


def test_identity_transformer(ident_spec):  # [TRIVIAL]
    for w in ["", "a", "cab", "abcc"]:
        assert transduce(ident_spec, w, 2 * len(w) + 2) == w


# ------------------------------------------------------------ serialization

@pytest.mark.parametrize("mode", ["B", "C"])
def test_json_round_trip(mode):
    spec = emit_compile(corpus_program("homomorphism-srasp"), mode)
    back = spec_from_json(spec_to_json(spec))
    assert back.layout == spec.layout and back.mode == mode and back.minlen == spec.minlen
    assert back.layers == spec.layers
    assert back.input_coords == spec.input_coords and back.output_coords == spec.output_coords
    assert spec_to_json(back) == spec_to_json(spec)
    assert transduce(back, "ABBC", 13) == "aaccd"


def test_json_rejects_other_documents():
    with pytest.raises(ValueError):
        spec_from_json('{"format": "something-else"}')
