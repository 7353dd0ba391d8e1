"""Exact symbolic answerer.

Frame k of an episode is answered from the look-back window
frames[max(0, k-h) .. k]. Temporal tags select frame scopes inside that
window: "now" is frame k alone, "last" is every windowed frame strictly
before k, "latest" is the whole window. Referent resolution scans the scope
from the most recent frame backwards and breaks ties within one frame by
(row, col) order. Every question is total: when a referent cannot be
resolved the frame's answer is the explicit invalid marker.
"""

from __future__ import annotations

from .programs import INVALID, QuestionProgram
from .scenes import SceneGraph, SceneObject


def _scope(tag: str, k: int, history: int) -> range:
    lo = max(0, k - history)
    if tag == "now":
        return range(k, k + 1)
    if tag == "last":
        return range(lo, k)
    if tag == "latest":
        return range(lo, k + 1)
    raise ValueError(f"unknown tag {tag!r}")


def _matches(o: SceneObject, color=None, shape=None) -> bool:
    return (color is None or o.color == color) and (shape is None or o.shape == shape)


def _find_referent(scenes, frames: range, color=None, shape=None):
    """Most recent match in the scope; ties broken by (row, col)."""
    for k in reversed(frames):
        hits = [o for o in scenes[k].objects if _matches(o, color, shape)]
        if hits:
            hits.sort(key=lambda o: (o.row, o.col))
            return k, hits[0]
    return None


def _any_match(scenes, frames: range, color=None, shape=None) -> bool:
    return any(
        _matches(o, color, shape) for k in frames for o in scenes[k].objects
    )


def _bool(value: bool) -> str:
    return "true" if value else "false"


def _relation_holds(o: SceneObject, ref: SceneObject, relation: str) -> bool:
    if relation == "left":
        return o.col < ref.col
    if relation == "right":
        return o.col > ref.col
    if relation == "above":
        return o.row < ref.row
    if relation == "below":
        return o.row > ref.row
    raise ValueError(f"unknown relation {relation!r}")


def _same_color_pair(scenes, k, history, shape_now, shape_last):
    now_ref = _find_referent(scenes, _scope("now", k, history), shape=shape_now)
    last_ref = _find_referent(scenes, _scope("last", k, history), shape=shape_last)
    if now_ref is None or last_ref is None:
        return None
    return now_ref[1].color == last_ref[1].color


def _same_shape_pair(scenes, k, history, color_now, color_last):
    now_ref = _find_referent(scenes, _scope("now", k, history), color=color_now)
    last_ref = _find_referent(scenes, _scope("last", k, history), color=color_last)
    if now_ref is None or last_ref is None:
        return None
    return now_ref[1].shape == last_ref[1].shape


def _conj(a, b):
    if a is None or b is None:
        return None
    return a and b


def _spatial_candidates(scene: SceneGraph, ref: SceneObject, relation: str):
    hits = [
        o for o in scene.objects
        if o is not ref and _relation_holds(o, ref, relation)
    ]
    hits.sort(key=lambda o: (abs(o.row - ref.row) + abs(o.col - ref.col),
                             o.row, o.col))
    return hits


def _frame_answer(p: QuestionProgram, scenes, k: int, history: int) -> str:
    cls = p.task_class
    c, s = p.colors, p.shapes

    if cls in ("Exist", "ExistColor", "ExistShape"):
        frames = _scope(p.tag, k, history)
        if len(frames) == 0:
            return INVALID
        color = c[0] if cls == "ExistColor" else None
        shape = s[0] if cls == "ExistShape" else None
        return _bool(_any_match(scenes, frames, color, shape))

    if cls in ("GetColor", "GetShape"):
        frames = _scope(p.tag, k, history)
        if len(frames) == 0:
            return INVALID
        if cls == "GetColor":
            ref = _find_referent(scenes, frames, shape=s[0])
            return INVALID if ref is None else ref[1].color
        ref = _find_referent(scenes, frames, color=c[0])
        return INVALID if ref is None else ref[1].shape

    if cls == "SimpleCompareColor" or cls == "AndSimpleCompareColor":
        now = _scope("now", k, history)

        def compare(s1, s2):
            r1 = _find_referent(scenes, now, shape=s1)
            r2 = _find_referent(scenes, now, shape=s2)
            if r1 is None or r2 is None:
                return None
            return r1[1].color == r2[1].color

        value = compare(s[0], s[1])
        if cls == "AndSimpleCompareColor":
            value = _conj(value, compare(s[2], s[3]))
        return INVALID if value is None else _bool(value)

    if cls == "SimpleCompareShape" or cls == "AndSimpleCompareShape":
        now = _scope("now", k, history)

        def compare(c1, c2):
            r1 = _find_referent(scenes, now, color=c1)
            r2 = _find_referent(scenes, now, color=c2)
            if r1 is None or r2 is None:
                return None
            return r1[1].shape == r2[1].shape

        value = compare(c[0], c[1])
        if cls == "AndSimpleCompareShape":
            value = _conj(value, compare(c[2], c[3]))
        return INVALID if value is None else _bool(value)

    if cls == "CompareColor":
        value = _same_color_pair(scenes, k, history, s[0], s[1])
        return INVALID if value is None else _bool(value)

    if cls == "AndCompareColor":
        value = _conj(
            _same_color_pair(scenes, k, history, s[0], s[1]),
            _same_color_pair(scenes, k, history, s[2], s[3]),
        )
        return INVALID if value is None else _bool(value)

    if cls == "CompareShape":
        value = _same_shape_pair(scenes, k, history, c[0], c[1])
        return INVALID if value is None else _bool(value)

    if cls == "AndCompareShape":
        value = _conj(
            _same_shape_pair(scenes, k, history, c[0], c[1]),
            _same_shape_pair(scenes, k, history, c[2], c[3]),
        )
        return INVALID if value is None else _bool(value)

    if cls in ("ExistColorOf", "ExistShapeOf"):
        ref = _find_referent(
            scenes, _scope("latest", k, history),
            shape=s[0] if cls == "ExistColorOf" else None,
            color=c[0] if cls == "ExistShapeOf" else None,
        )
        if ref is None:
            return INVALID
        ref_frame, ref_obj = ref
        for o in scenes[k].objects:
            if ref_frame == k and (o.row, o.col) == (ref_obj.row, ref_obj.col):
                continue  # the referent itself is not "another object"
            if cls == "ExistColorOf" and o.color == ref_obj.color:
                return _bool(True)
            if cls == "ExistShapeOf" and o.shape == ref_obj.shape:
                return _bool(True)
        return _bool(False)

    if cls in ("ExistSpace", "ExistColorSpace", "ExistShapeSpace",
               "GetColorSpace", "GetShapeSpace"):
        ref_color, ref_shape = c[-1], s[-1]
        ref = _find_referent(
            scenes, _scope("now", k, history), color=ref_color, shape=ref_shape
        )
        if ref is None:
            return INVALID
        hits = _spatial_candidates(scenes[k], ref[1], p.relation)
        if cls == "ExistSpace":
            return _bool(bool(hits))
        if cls == "ExistColorSpace":
            return _bool(any(o.color == c[0] for o in hits))
        if cls == "ExistShapeSpace":
            return _bool(any(o.shape == s[0] for o in hits))
        if not hits:
            return INVALID
        return hits[0].color if cls == "GetColorSpace" else hits[0].shape

    if cls in ("ExistLastColorSameShape", "ExistLastShapeSameColor"):
        ref = _find_referent(
            scenes, _scope("last", k, history),
            shape=s[0] if cls == "ExistLastColorSameShape" else None,
            color=c[0] if cls == "ExistLastShapeSameColor" else None,
        )
        if ref is None:
            return INVALID
        if cls == "ExistLastColorSameShape":
            return _bool(any(o.color == ref[1].color for o in scenes[k].objects))
        return _bool(any(o.shape == ref[1].shape for o in scenes[k].objects))

    if cls == "ExistLastObjectSameObject":
        anchor = None
        for j in reversed(_scope("last", k, history)):
            if scenes[j].objects:
                anchor = j
                break
        if anchor is None:
            return INVALID
        past_pairs = {(o.color, o.shape) for o in scenes[anchor].objects}
        now_pairs = {(o.color, o.shape) for o in scenes[k].objects}
        return _bool(bool(past_pairs & now_pairs))

    raise ValueError(f"no oracle rule for {cls!r}")


def oracle_answer(program: QuestionProgram, scenes, history: int) -> list[str]:
    """Per-frame answers for a scene sequence under the given look-back."""
    scenes = list(scenes)
    return [_frame_answer(program, scenes, k, history) for k in range(len(scenes))]
