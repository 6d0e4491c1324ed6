import pytest

from freightmode.core import (AreaType, ModeLabel, SctgGroups, Unmatched, aggregate_mode,
                              classify_area, frame_to_records, records_to_frame, sctg_to_group)
from freightmode.core import MODE_CODES
from freightmode.errors import UnknownArea, UnknownCategory

from conftest import make_record


def test_mode_label_has_five_stable_ordinals():
    assert [int(m) for m in ModeLabel] == [1, 2, 3, 4, 5]
    assert ModeLabel.Air.index == 3
    assert ModeLabel.from_index(0) is ModeLabel.ForHireTruck


@pytest.mark.parametrize("code,label", [("04", ModeLabel.ForHireTruck), ("15", ModeLabel.Other),
                                        ("05", ModeLabel.PrivateTruck), ("14", ModeLabel.Parcel),
                                        ("11", ModeLabel.Air)])
def test_aggregate_mode_examples(code, label):
    assert aggregate_mode(code) is label


@pytest.mark.parametrize("code", ["00", "", "13", "99", "4", "abc", "1O1"])
def test_aggregate_mode_unmatched(code):
    assert aggregate_mode(code) is Unmatched


def test_aggregate_mode_maps_exactly_the_fourteen_codes():
    expected = {"04", "05", "06", "07", "08", "09", "10", "101", "11", "12", "14", "15", "16", "17"}
    assert set(MODE_CODES) == expected
    assert {aggregate_mode(c) for c in expected} == set(ModeLabel)
    for c in (f"{i:02d}" for i in range(100)):
        assert (aggregate_mode(c) is not Unmatched) == (c in expected)


def test_sctg_to_group_is_deterministic_and_total():
    groups = SctgGroups.default()
    assert sctg_to_group("01", groups) == sctg_to_group("01", groups)
    assert len(groups.codes) == 43
    assert {sctg_to_group(c, groups) for c in groups.codes} == set(range(1, 10))
    with pytest.raises(UnknownCategory):
        sctg_to_group("99", groups)


def test_classify_area():
    lookup = {"123": AreaType.C, "06-99999": AreaType.R}
    assert classify_area("123", lookup) is AreaType.C
    assert classify_area("06-99999", lookup) is AreaType.R
    with pytest.raises(UnknownArea):
        classify_area("404", lookup)


def test_record_frame_round_trip():
    recs = [make_record("a"), make_record("b", mode=ModeLabel.Air, export=True)]
    df = records_to_frame(recs)
    assert list(df["mode_idx"]) == [0, 3]
    assert frame_to_records(df) == recs


def test_record_rejects_nonpositive_weight():
    with pytest.raises(ValueError):
        make_record(weight=0.0)
