"""Parameter validation, token serialization, template expansion, file staging."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ei.cmdline import (
    ExpansionContext,
    FileMaterializeError,
    TemplateError,
    expand_template,
    materialize_files,
    serialize_parameters,
    validate_parameters,
    validate_virtual_paths,
)
from ei.registry import ParamSection, ParameterSpec

CHOICE_C = ParamSection(
    prefix="-", check=True, params=(ParameterSpec("c", "single-choice", options=("1", "2")),)
)

METACHARS = "; | & $ > < ` ( ) ' \" \n * ? ~ ! \\".split(" ") + ["\n", "$(touch pwned)", "`id`"]


# ---------------------------------------------------------------------------
# validate_parameters
# ---------------------------------------------------------------------------


def test_valid_choice_value():
    assert validate_parameters(CHOICE_C, {"c": ["1"]}) == []


def test_absent_parameters_are_fine():
    assert validate_parameters(CHOICE_C, {}) == []


def test_out_of_options_value_names_the_parameter():
    violations = validate_parameters(CHOICE_C, {"c": ["3"]})
    assert len(violations) == 1
    assert violations[0].param == "c"
    assert "option" in violations[0].reason


def test_unknown_parameter():
    (violation,) = validate_parameters(CHOICE_C, {"zz": ["1"]})
    assert violation.param == "zz"


def test_single_choice_rejects_multiple_values():
    assert any("single" in v.reason for v in validate_parameters(CHOICE_C, {"c": ["1", "2"]}))


def test_flag_takes_no_value():
    section = ParamSection(params=(ParameterSpec("v", "flag"),))
    assert validate_parameters(section, {"v": []}) == []
    assert validate_parameters(section, {"v": ["true"]}) == []
    assert validate_parameters(section, {"v": ["false"]}) == []
    assert any("no value" in v.reason for v in validate_parameters(section, {"v": ["yes"]}))


def test_check_off_passes_everything():
    section = ParamSection(check=False, params=CHOICE_C.params)
    assert validate_parameters(section, {"c": ["3"], "zz": ["; rm -rf /"]}) == []


# ---------------------------------------------------------------------------
# serialize_parameters
# ---------------------------------------------------------------------------


def test_serializes_name_value_as_two_tokens():
    assert serialize_parameters(CHOICE_C, {"c": ["1"]}) == ["-c", "1"]


def test_empty_without_defaults_serializes_nothing():
    assert serialize_parameters(CHOICE_C, {}) == []


def test_multi_choice_repeats_per_value():
    section = ParamSection(prefix="--", params=(ParameterSpec("m", "multi-choice", options=("a", "b")),))
    assert serialize_parameters(section, {"m": ["a", "b"]}) == ["--m", "a", "--m", "b"]


def test_flag_emits_bare_name_token():
    section = ParamSection(params=(ParameterSpec("v", "flag"),))
    assert serialize_parameters(section, {"v": []}) == ["-v"]
    assert serialize_parameters(section, {"v": ["true"]}) == ["-v"]
    assert serialize_parameters(section, {"v": ["false"]}) == []
    assert serialize_parameters(section, {}) == []


def test_defaults_fill_in_for_absent_parameters():
    section = ParamSection(
        params=(
            ParameterSpec("mode", "single-choice", options=("fast", "slow"), defaults=("slow",)),
            ParameterSpec("v", "flag", defaults=("true",)),
            ParameterSpec("label", "free-text", defaults=("none",)),
        )
    )
    assert serialize_parameters(section, {}) == ["-mode", "slow", "-v", "-label", "none"]


def test_provided_value_overrides_default():
    section = ParamSection(
        params=(ParameterSpec("mode", "single-choice", options=("fast", "slow"), defaults=("slow",)),)
    )
    assert serialize_parameters(section, {"mode": ["fast"]}) == ["-mode", "fast"]


def test_declaration_order_wins_over_request_order():
    section = ParamSection(
        params=(
            ParameterSpec("a", "free-text"),
            ParameterSpec("b", "free-text"),
            ParameterSpec("c", "free-text"),
        )
    )
    provided = {"c": ["3"], "a": ["1"], "b": ["2"]}
    assert serialize_parameters(section, provided) == ["-a", "1", "-b", "2", "-c", "3"]


@settings(max_examples=100, deadline=None)
@given(st.permutations(["a", "b", "c", "d"]))
def test_order_preservation_property(order):
    section = ParamSection(params=tuple(ParameterSpec(n, "free-text") for n in "abcd"))
    provided = {name: [name.upper()] for name in order}
    tokens = serialize_parameters(section, provided)
    assert tokens == ["-a", "A", "-b", "B", "-c", "C", "-d", "D"]


def test_unknown_names_append_after_declared_when_check_off():
    section = ParamSection(check=False, params=(ParameterSpec("a", "free-text"),))
    tokens = serialize_parameters(section, {"zz": ["x"], "a": ["1"]})
    assert tokens == ["-a", "1", "-zz", "x"]


# ---------------------------------------------------------------------------
# expand_template
# ---------------------------------------------------------------------------


def make_ctx(**overrides) -> ExpansionContext:
    base = dict(
        serialized_params=("-c", "1"),
        file_paths=("/w/sum.c",),
        outline_tokens=("main", "loop"),
        execid="EI123",
        stream_dir="/s/EI123/stream",
        download_dir="/s/EI123/download",
        session_id="sess-1",
        client_id="cli",
    )
    base.update(overrides)
    return ExpansionContext(**base)


def test_expands_parameters_placeholder():
    argv = expand_template("/path-to/myapp _ei_parameters", make_ctx())
    assert argv == ["/path-to/myapp", "-c", "1"]


def test_no_placeholders_passes_through():
    assert expand_template("/bin/true", make_ctx()) == ["/bin/true"]


def test_all_eight_placeholders():
    template = (
        "/tool _ei_parameters _ei_files _ei_outline _ei_execid"
        " _ei_stream _ei_download _ei_sessionid _ei_clientid"
    )
    argv = expand_template(template, make_ctx())
    assert argv == [
        "/tool", "-c", "1", "/w/sum.c", "main", "loop", "EI123",
        "/s/EI123/stream", "/s/EI123/download", "sess-1", "cli",
    ]


def test_empty_expansions_drop_out():
    ctx = make_ctx(serialized_params=(), file_paths=(), outline_tokens=())
    assert expand_template("/tool _ei_parameters _ei_files _ei_outline -x", ctx) == ["/tool", "-x"]


def test_repeated_placeholder_expands_each_time():
    argv = expand_template("/tool _ei_parameters _ei_parameters", make_ctx())
    assert argv == ["/tool", "-c", "1", "-c", "1"]


def test_expansion_is_pure():
    ctx = make_ctx()
    assert expand_template("/tool _ei_files", ctx) == expand_template("/tool _ei_files", ctx)


def test_unknown_placeholder_raises():
    with pytest.raises(TemplateError):
        expand_template("/tool _ei_nope", make_ctx())


def test_client_values_cannot_create_tokens():
    for value in METACHARS + ["a b c", "-c 1 -d 2", "x\ty"]:
        ctx = make_ctx(serialized_params=("-p", value))
        argv = expand_template("/tool _ei_parameters", ctx)
        assert argv == ["/tool", "-p", value]  # one token, verbatim


# ---------------------------------------------------------------------------
# materialize_files
# ---------------------------------------------------------------------------


def test_materialize_round_trips_content(tmp_path):
    paths = materialize_files([("sum.c", b"int main;")], tmp_path)
    assert paths == [str(tmp_path / "sum.c")]
    assert (tmp_path / "sum.c").read_bytes() == b"int main;"


def test_materialize_empty(tmp_path):
    assert materialize_files([], tmp_path) == []


def test_materialize_preserves_structure_and_order(tmp_path):
    files = [("b/deep/x.txt", b"x"), ("a.txt", b"a")]
    paths = materialize_files(files, tmp_path)
    assert paths == [str(tmp_path / "b/deep/x.txt"), str(tmp_path / "a.txt")]


def test_materialize_rejects_escape(tmp_path):
    with pytest.raises(FileMaterializeError):
        materialize_files([("a/../../x", b"")], tmp_path)


def test_materialize_rejects_absolute(tmp_path):
    with pytest.raises(FileMaterializeError):
        materialize_files([("/etc/passwd", b"")], tmp_path)


def test_materialize_rejects_duplicates(tmp_path):
    with pytest.raises(FileMaterializeError):
        materialize_files([("a.txt", b"1"), ("sub/../a.txt", b"2")], tmp_path)


def test_virtual_path_rules():
    assert validate_virtual_paths(["ok.c", "sub/ok.c"]) is None
    assert validate_virtual_paths(["../up"]) is not None
    assert validate_virtual_paths(["a\\b"]) is not None
    assert validate_virtual_paths([""]) is not None
    assert validate_virtual_paths(["."]) is not None


@settings(max_examples=150, deadline=None)
@given(
    st.lists(
        st.text(
            alphabet="abAB1._-/ \t\n;$`'\"\\",
            min_size=1,
            max_size=24,
        ),
        max_size=4,
    )
)
def test_materialize_containment_property(tmp_path_factory, raw_paths):
    """Whatever the request claims, files land inside the workdir or nowhere."""
    workdir = tmp_path_factory.mktemp("contain")
    try:
        created = materialize_files([(p, b"x") for p in raw_paths], workdir)
    except FileMaterializeError:
        return
    for path in created:
        assert str(path).startswith(str(workdir))


def test_rejected_paths_leave_no_trace(tmp_path):
    workdir = tmp_path / "w"
    workdir.mkdir()
    with pytest.raises(FileMaterializeError):
        materialize_files([("good.txt", b"ok"), ("../evil", b"no")], workdir)
    # Validation happens before any write: nothing materialized at all.
    assert list(workdir.iterdir()) == []
