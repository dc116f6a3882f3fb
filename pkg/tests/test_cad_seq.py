import random

import pytest
from hypothesis import given, strategies as st

from secad.cad_seq import (
    CadModel,
    Circle,
    Extrusion,
    Face,
    Line,
    Loop,
    SePair,
    Sketch,
    ValidationConfig,
    detokenize,
    parse,
    serialize,
    tokenize,
    validate,
)
from secad.errors import (
    BadEnumLiteral,
    EmptyLoop,
    OutOfRangeNumber,
    TruncatedSequence,
    UnknownKeyword,
)
from secad.variation import VariationConfig, random_model

from conftest import SQUARE


def test_parse_square_minimal():
    model = parse(SQUARE)
    assert len(model.ses) == 1
    loop = model.ses[0].sketch.faces[0].loops[0]
    assert [type(c) for c in loop.curves] == [Line] * 4
    assert model.ses[0].extrusion.bool_op == "new"
    assert model.ses[0].extrusion.extent == "one"


def test_parse_serialize_identity_on_square():
    model = parse(SQUARE)
    assert serialize(model) == SQUARE
    assert parse(serialize(model)) == model


def test_parse_normalizes_whitespace():
    sloppy = SQUARE.replace(" ", "   ", 3).replace("extrude", "\n extrude")
    assert serialize(parse(sloppy)) == SQUARE


def test_empty_loop_error_position():
    with pytest.raises(EmptyLoop) as exc:
        parse("sketch face loop extrude theta 1 phi 1 gamma 1 origin 1 1 1 scale 1 dist 1 1 op new ext one <eom>")
    assert exc.value.token_index == 3


def test_number_out_of_range():
    with pytest.raises(OutOfRangeNumber) as exc:
        parse("sketch face loop circle 128 128 300 extrude theta 1 phi 1 gamma 1 origin 1 1 1 scale 1 dist 1 1 op new ext one <eom>")
    assert exc.value.token_index == 6


def test_number_malformed():
    with pytest.raises(OutOfRangeNumber):
        parse(SQUARE.replace("192 64", "-5 64", 1))


def test_truncated_sequence():
    tokens = tokenize(SQUARE)
    with pytest.raises(TruncatedSequence):
        parse(detokenize(tokens[:7]))
    with pytest.raises(TruncatedSequence):
        parse(SQUARE.replace(" <eom>", ""))
    with pytest.raises(TruncatedSequence):
        parse("")


def test_bad_enum_literal():
    with pytest.raises(BadEnumLiteral):
        parse(SQUARE.replace("op new", "op weld"))
    with pytest.raises(BadEnumLiteral):
        parse(SQUARE.replace("ext one", "ext both"))


def test_unknown_keyword_and_trailing_tokens():
    with pytest.raises(UnknownKeyword):
        parse(SQUARE.replace("sketch", "sketches", 1))
    with pytest.raises(UnknownKeyword):
        parse(SQUARE + " line")


def test_tokenize_examples():
    assert tokenize("line  64 64") == ["line", "64", "64"]
    assert tokenize("") == []
    assert tokenize("<mask> line") == ["<mask>", "line"]


@given(st.text(alphabet=st.sampled_from("ab <>\t\n0"), max_size=60))
def test_tokenize_join_identity(text):
    tokens = tokenize(text)
    assert tokenize(detokenize(tokens)) == tokens


def test_serialize_deterministic_for_equal_models():
    a = parse(SQUARE)
    b = parse(SQUARE)
    assert a == b
    assert serialize(a) == serialize(b)


def test_circle_serialization_has_one_circle_token(cylinder_text):
    model = parse(cylinder_text)
    assert serialize(model).count("circle") == 1


def test_validate_square_ok():
    report = validate(parse(SQUARE), ValidationConfig(max_se=3))
    assert report.is_valid and not report.errors


def _square_se(op="new"):
    loop = Loop((Line(192, 64), Line(192, 192), Line(64, 192), Line(64, 64)))
    ext = Extrusion(128, 128, 128, 128, 128, 128, 128, 160, 128, op, "one")
    return SePair(Sketch((Face((loop,)),)), ext)


def test_validate_too_many_se():
    model = CadModel(tuple([_square_se()] + [_square_se("join")] * 3))
    report = validate(model, ValidationConfig(max_se=3))
    assert not report.is_valid
    assert "TooManySe" in report.codes()


def test_validate_too_long():
    model = CadModel(tuple([_square_se()] + [_square_se("join")] * 40))
    report = validate(model, ValidationConfig(max_se=None, max_tokens=1024))
    assert "TooLong" in report.codes()


def test_validate_structural_invariants():
    bad_circle = CadModel((SePair(
        Sketch((Face((Loop((Circle(128, 128, 32), Line(10, 10))),)),)),
        _square_se().extrusion,
    ),))
    assert "CircleNotAlone" in validate(bad_circle).codes()

    two_lines = CadModel((SePair(
        Sketch((Face((Loop((Line(10, 10), Line(20, 20))),)),)),
        _square_se().extrusion,
    ),))
    assert "TooFewCurves" in validate(two_lines).codes()

    small_radius = CadModel((SePair(
        Sketch((Face((Loop((Circle(128, 128, 0),)),)),)),
        _square_se().extrusion,
    ),))
    assert "RadiusTooSmall" in validate(small_radius).codes()

    not_new = CadModel((_square_se("join"),))
    assert "FirstOpNotNew" in validate(not_new).codes()


def test_validate_reports_all_violations():
    model = CadModel((SePair(
        Sketch((Face((Loop((Circle(128, 128, 0), Line(300, 10))),)),)),
        _square_se("cut").extrusion,
    ),))
    codes = validate(model).codes()
    assert {"CircleNotAlone", "RadiusTooSmall", "OutOfRange", "FirstOpNotNew"} <= set(codes)


def test_roundtrip_random_models():
    rng = random.Random(99)
    config = VariationConfig(check_geometry=False)
    for _ in range(200):
        model = random_model(rng, config)
        text = serialize(model)
        again = parse(text)
        assert again == model
        assert serialize(again) == text


def test_parse_error_index_in_bounds():
    rng = random.Random(5)
    base = tokenize(SQUARE)
    for _ in range(300):
        tokens = list(base)
        cut = rng.randrange(1, len(tokens))
        if rng.random() < 0.5:
            tokens = tokens[:cut]
        else:
            tokens[cut - 1] = rng.choice(["zap", "999", "-1", "<mask>"])
        try:
            parse(detokenize(tokens))
        except (UnknownKeyword, OutOfRangeNumber, TruncatedSequence, EmptyLoop, BadEnumLiteral) as exc:
            assert 0 <= exc.token_index < max(1, len(tokens))
