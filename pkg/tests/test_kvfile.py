import pytest

from dyncorr.kvfile import KVFormatError, as_float, as_int, parse_kv


def test_sections_in_order_and_repeatable():
    secs = parse_kv("a = 1\n# note\n; other note\n\n[inject]\nx = 2\n[inject]\nx = 3\n[skill s one]\nk=v = w\n")
    assert [s.name for s in secs] == ["", "inject", "inject", "skill"]
    assert secs[0].entries == {"a": "1"}
    assert secs[3].label == "s one"
    assert secs[3].entries == {"k": "v = w"}
    assert as_int(secs[1], "x") == 2
    assert as_float(secs[2], "x") == 3.0
    assert as_float(secs[2], "missing", 9.5) == 9.5


@pytest.mark.parametrize("text", ["[open", "[]", "novalue", "= 3", "a = 1\na = 2"])
def test_malformed(text):
    with pytest.raises(KVFormatError):
        parse_kv(text)


def test_typed_getters_report_key():
    sec = parse_kv("[inject]\nstart = soon\n")[1]
    with pytest.raises(KVFormatError, match="start"):
        as_int(sec, "start")
    with pytest.raises(KVFormatError, match="end"):
        as_int(sec, "end")
