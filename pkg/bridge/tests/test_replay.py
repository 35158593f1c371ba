"""Unit tests for the script replay model."""

import json

import pytest

from motsbridge.replay import ReplayError, ScriptError, ScriptModel


def small_doc():
    return {
        "v": 1,
        "width": 16,
        "height": 8,
        "n_frames": 3,
        "frames": [
            {
                "detections": [
                    {"class_id": 1, "score": 0.9, "bbox": [1.0, 1.0, 5.0, 4.0]}
                ],
                "tracks": {
                    "1": {"rle": "a1", "score": 0.95},
                    "2": {"rle": "b2", "score": 0.80},
                },
            },
            {
                "detections": [],
                "tracks": {"1": {"rle": "a2", "score": 0.92}},
            },
            {
                "detections": [],
                "tracks": {"2": {"rle": "b3", "score": 0.70}},
            },
        ],
    }


def model():
    return ScriptModel.from_dict(small_doc())


def test_from_dict_reads_geometry():
    m = model()
    assert (m.width, m.height, m.n_frames) == (16, 8, 3)
    assert m.cursor == -1
    assert m.active == set()


def test_detect_returns_script_entries_verbatim():
    m = model()
    dets = m.detect(0)
    assert dets == small_doc()["frames"][0]["detections"]
    assert m.detect(1) == []


def test_frame_cursor_allows_repeat_and_advance():
    m = model()
    m.detect(0)
    m.detect(0)
    m.detect(1)
    assert m.cursor == 1


def test_skipping_ahead_is_out_of_order():
    m = model()
    m.detect(0)
    with pytest.raises(ReplayError, match="out-of-order"):
        m.detect(2)
    assert m.cursor == 0  # a refused request does not advance playback
    m.detect(1)


def test_going_backwards_is_out_of_order():
    m = model()
    m.detect(0)
    m.detect(1)
    with pytest.raises(ReplayError, match="out-of-order"):
        m.detect(0)


def test_bad_frame_index_is_refused():
    m = model()
    with pytest.raises(ReplayError, match="frame_index"):
        m.detect(-1)
    with pytest.raises(ReplayError, match="frame_index"):
        m.detect("zero")
    with pytest.raises(ReplayError, match="frame_index"):
        m.detect(True)


def test_exhaustion_when_script_is_shorter_than_announced():
    doc = small_doc()
    doc["frames"] = doc["frames"][:1]
    m = ScriptModel.from_dict(doc)
    m.detect(0)
    with pytest.raises(ReplayError, match="exhausted"):
        m.detect(1)


def test_add_prompt_activates_and_answers():
    m = model()
    obs = m.add_prompt(0, 1, [1.0, 1.0, 5.0, 4.0])
    assert obs == [{"track_id": 1, "rle": "a1", "score": 0.95}]
    assert m.active == {1}


def test_add_prompt_without_script_entry_fails():
    m = model()
    m.detect(0)
    m.detect(1)
    with pytest.raises(ReplayError, match="track 2"):
        m.add_prompt(1, 2, [0.0, 0.0, 1.0, 1.0])


def test_propagate_serves_active_tracks_in_id_order():
    m = model()
    m.add_prompt(0, 2, None)
    m.add_prompt(0, 1, None)
    obs = m.propagate(0)
    assert [o["track_id"] for o in obs] == [1, 2]
    assert [o["rle"] for o in obs] == ["a1", "b2"]


def test_track_absent_from_frame_yields_no_observation():
    m = model()
    m.add_prompt(0, 1, None)
    m.add_prompt(0, 2, None)
    assert [o["track_id"] for o in m.propagate(1)] == [1]
    assert [o["track_id"] for o in m.propagate(2)] == [2]


def test_drop_track_deactivates():
    m = model()
    m.add_prompt(0, 1, None)
    m.add_prompt(0, 2, None)
    m.drop_track(2)
    assert [o["track_id"] for o in m.propagate(0)] == [1]
    with pytest.raises(ReplayError, match="not active"):
        m.drop_track(2)


def test_set_window_records_and_validates():
    m = model()
    m.set_window(16)
    assert m.window == 16
    m.set_window(0)
    assert m.window == 0
    with pytest.raises(ReplayError, match="t_w"):
        m.set_window(-1)
    with pytest.raises(ReplayError, match="t_w"):
        m.set_window("all")


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d.update(v=2), "script version"),
        (lambda d: d.update(width=0), "width"),
        (lambda d: d.update(height="tall"), "height"),
        (lambda d: d.update(n_frames=2), "announces"),
        (lambda d: d.update(frames={"0": {}}), "frames must be a list"),
        (lambda d: d["frames"][0]["tracks"].update(car={"rle": "x", "score": 1}),
         "not an id"),
        (lambda d: d["frames"][0]["tracks"].update({"0": {"rle": "x", "score": 1}}),
         "positive"),
        (lambda d: d["frames"][0]["tracks"]["1"].update(rle=7), "rle"),
        (lambda d: d["frames"][0]["tracks"]["1"].update(score="high"), "score"),
        (lambda d: d["frames"][0]["detections"][0].update(bbox=[1, 2, 3]), "bbox"),
        (lambda d: d["frames"][0]["detections"][0].pop("class_id"), "class_id"),
    ],
)
def test_from_dict_rejects_malformed_scripts(mutate, message):
    doc = small_doc()
    mutate(doc)
    with pytest.raises(ScriptError, match=message):
        ScriptModel.from_dict(doc)


def test_from_file_round_trip(tmp_path):
    path = tmp_path / "script.json"
    path.write_text(json.dumps(small_doc()), encoding="utf-8")
    m = ScriptModel.from_file(str(path))
    assert m.n_frames == 3


def test_from_file_rejects_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ScriptError, match="not valid json"):
        ScriptModel.from_file(str(path))


def test_from_file_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        ScriptModel.from_file(str(tmp_path / "absent.json"))
