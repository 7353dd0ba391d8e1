"""Question programs: task classes, their groups, templates, and answer sets.

A program is a task class plus typed arguments (attribute constants, one
spatial relation, a temporal tag). Each program realizes to a deterministic
token sequence; the vocabulary and answer list are fixed module-wide so all
generated corpora share one id space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .scenes import COLORS, SHAPES

RELATIONS = ("left", "right", "above", "below")
TAGS = ("now", "last", "latest")

BOOLEAN_ANSWERS = ("false", "true")
INVALID = "invalid"
ANSWERS = BOOLEAN_ANSWERS + (INVALID,) + COLORS + SHAPES
ANSWER_INDEX = {a: i for i, a in enumerate(ANSWERS)}

TASK_GROUPS = {
    "Basic": ("Exist", "ExistColor", "ExistShape", "GetColor", "GetShape"),
    "Obj-Attr": (
        "SimpleCompareColor", "SimpleCompareShape",
        "AndSimpleCompareColor", "AndSimpleCompareShape",
    ),
    "Compare": (
        "CompareColor", "CompareShape", "AndCompareColor", "AndCompareShape",
        "ExistColorOf", "ExistShapeOf",
    ),
    "Spatial": (
        "ExistSpace", "ExistColorSpace", "ExistShapeSpace",
        "GetColorSpace", "GetShapeSpace",
    ),
    "Cognitive": (
        "ExistLastColorSameShape", "ExistLastShapeSameColor",
        "ExistLastObjectSameObject",
    ),
}
GROUP_TREE = {"A": ("Basic", "Obj-Attr", "Compare"), "B": ("Spatial", "Cognitive")}
TASK_CLASSES = tuple(itertools.chain.from_iterable(TASK_GROUPS.values()))
GROUP_OF = {
    cls: group for group, classes in TASK_GROUPS.items() for cls in classes
}

# (n_colors, n_shapes, uses_relation, uses_tag) per class; colors/shapes list
# the argument arity, query argument first, reference descriptor last.
_SIGNATURES = {
    "Exist": (0, 0, False, True),
    "ExistColor": (1, 0, False, True),
    "ExistShape": (0, 1, False, True),
    "GetColor": (0, 1, False, True),
    "GetShape": (1, 0, False, True),
    "SimpleCompareColor": (0, 2, False, False),
    "SimpleCompareShape": (2, 0, False, False),
    "AndSimpleCompareColor": (0, 4, False, False),
    "AndSimpleCompareShape": (4, 0, False, False),
    "CompareColor": (0, 2, False, False),
    "CompareShape": (2, 0, False, False),
    "AndCompareColor": (0, 4, False, False),
    "AndCompareShape": (4, 0, False, False),
    "ExistColorOf": (0, 1, False, False),
    "ExistShapeOf": (1, 0, False, False),
    "ExistSpace": (1, 1, True, False),
    "ExistColorSpace": (2, 1, True, False),
    "ExistShapeSpace": (1, 2, True, False),
    "GetColorSpace": (1, 1, True, False),
    "GetShapeSpace": (1, 1, True, False),
    "ExistLastColorSameShape": (0, 1, False, False),
    "ExistLastShapeSameColor": (1, 0, False, False),
    "ExistLastObjectSameObject": (0, 0, False, False),
}


@dataclass(frozen=True)
class QuestionProgram:
    task_class: str
    colors: tuple[str, ...] = ()
    shapes: tuple[str, ...] = ()
    relation: str | None = None
    tag: str | None = None

    def __post_init__(self):
        if self.task_class not in _SIGNATURES:
            raise ValueError(f"unknown task class {self.task_class!r}")
        n_colors, n_shapes, uses_rel, uses_tag = _SIGNATURES[self.task_class]
        if len(self.colors) != n_colors or len(self.shapes) != n_shapes:
            raise ValueError(
                f"{self.task_class} expects {n_colors} colors / {n_shapes} shapes, "
                f"got {self.colors} / {self.shapes}"
            )
        if any(c not in COLORS for c in self.colors):
            raise ValueError(f"unknown color in {self.colors}")
        if any(s not in SHAPES for s in self.shapes):
            raise ValueError(f"unknown shape in {self.shapes}")
        if uses_rel != (self.relation is not None) or (
            self.relation is not None and self.relation not in RELATIONS
        ):
            raise ValueError(f"bad relation {self.relation!r} for {self.task_class}")
        if uses_tag != (self.tag is not None) or (
            self.tag is not None and self.tag not in TAGS
        ):
            raise ValueError(f"bad tag {self.tag!r} for {self.task_class}")

    @property
    def group(self) -> str:
        return GROUP_OF[self.task_class]

    def tokens(self) -> list[str]:
        return _render_tokens(self)

    def to_dict(self) -> dict:
        return {
            "task_class": self.task_class,
            "colors": list(self.colors),
            "shapes": list(self.shapes),
            "relation": self.relation,
            "tag": self.tag,
        }

    @staticmethod
    def from_dict(d: dict) -> "QuestionProgram":
        return QuestionProgram(
            task_class=d["task_class"],
            colors=tuple(d.get("colors") or ()),
            shapes=tuple(d.get("shapes") or ()),
            relation=d.get("relation"),
            tag=d.get("tag"),
        )


def _render_tokens(p: QuestionProgram) -> list[str]:
    c, s = p.colors, p.shapes
    cls = p.task_class
    if cls == "Exist":
        return ["exist", "any", "object", p.tag]
    if cls == "ExistColor":
        return ["exist", c[0], "object", p.tag]
    if cls == "ExistShape":
        return ["exist", "any", s[0], p.tag]
    if cls == "GetColor":
        return ["query", "color", "of", s[0], p.tag]
    if cls == "GetShape":
        return ["query", "shape", "of", c[0], "object", p.tag]
    if cls == "SimpleCompareColor":
        return ["same", "color", "of", s[0], "and", s[1], "now"]
    if cls == "SimpleCompareShape":
        return ["same", "shape", "of", c[0], "object", "and", c[1], "object", "now"]
    if cls == "AndSimpleCompareColor":
        return ["same", "color", "of", s[0], "and", s[1],
                "also", "of", s[2], "and", s[3], "now"]
    if cls == "AndSimpleCompareShape":
        return ["same", "shape", "of", c[0], "object", "and", c[1], "object",
                "also", "of", c[2], "object", "and", c[3], "object", "now"]
    if cls == "CompareColor":
        return ["same", "color", "of", s[0], "now", "and", s[1], "last"]
    if cls == "CompareShape":
        return ["same", "shape", "of", c[0], "object", "now",
                "and", c[1], "object", "last"]
    if cls == "AndCompareColor":
        return ["same", "color", "of", s[0], "now", "and", s[1], "last",
                "also", "of", s[2], "now", "and", s[3], "last"]
    if cls == "AndCompareShape":
        return ["same", "shape", "of", c[0], "object", "now",
                "and", c[1], "object", "last",
                "also", "of", c[2], "object", "now", "and", c[3], "object", "last"]
    if cls == "ExistColorOf":
        return ["exist", "now", "object", "with", "color", "of", "latest", s[0]]
    if cls == "ExistShapeOf":
        return ["exist", "now", "object", "with", "shape", "of",
                "latest", c[0], "object"]
    if cls == "ExistSpace":
        return ["exist", "object", p.relation, "of", c[0], s[0], "now"]
    if cls == "ExistColorSpace":
        return ["exist", c[0], "object", p.relation, "of", c[1], s[0], "now"]
    if cls == "ExistShapeSpace":
        return ["exist", "any", s[0], p.relation, "of", c[0], s[1], "now"]
    if cls == "GetColorSpace":
        return ["query", "color", "of", "object", p.relation, "of",
                c[0], s[0], "now"]
    if cls == "GetShapeSpace":
        return ["query", "shape", "of", "object", p.relation, "of",
                c[0], s[0], "now"]
    if cls == "ExistLastColorSameShape":
        return ["exist", "now", "object", "with", "color", "of", "last", s[0]]
    if cls == "ExistLastShapeSameColor":
        return ["exist", "now", "object", "with", "shape", "of",
                "last", c[0], "object"]
    if cls == "ExistLastObjectSameObject":
        return ["exist", "now", "object", "same", "as", "last", "object"]
    raise ValueError(f"no template for {cls!r}")


_FUNCTION_WORDS = (
    "exist", "any", "object", "query", "color", "shape", "of",
    "same", "and", "also", "with", "as",
)
VOCABULARY = _FUNCTION_WORDS + COLORS + SHAPES + RELATIONS + TAGS
TOKEN_INDEX = {w: i for i, w in enumerate(VOCABULARY)}


def encode_tokens(words) -> list[int]:
    return [TOKEN_INDEX[w] for w in words]


def decode_tokens(ids) -> list[str]:
    return [VOCABULARY[i] for i in ids]


def answer_set(task_class: str) -> frozenset:
    """Answers a task class can produce (including the invalid marker)."""
    if task_class in ("GetColor", "GetColorSpace"):
        return frozenset(COLORS) | {INVALID}
    if task_class in ("GetShape", "GetShapeSpace"):
        return frozenset(SHAPES) | {INVALID}
    return frozenset(BOOLEAN_ANSWERS) | {INVALID}


def named_task_family(name: str) -> dict[str, float]:
    """Uniform class weights for a named family: 'all', a group name,
    or 'Group-A'/'Group-B' from the two-level hierarchy."""
    if name == "all":
        classes = TASK_CLASSES
    elif name in TASK_GROUPS:
        classes = TASK_GROUPS[name]
    elif name in ("Group-A", "Group-B"):
        groups = GROUP_TREE[name[-1]]
        classes = tuple(
            cls for g in groups for cls in TASK_GROUPS[g]
        )
    else:
        raise ValueError(f"unknown task family name {name!r}")
    return {cls: 1.0 for cls in classes}


def parse_task_family(spec: str) -> dict[str, float]:
    """Parse 'all', a group name, or comma-separated 'Class[:weight]' terms."""
    spec = spec.strip()
    if ":" not in spec and "," not in spec and spec not in TASK_CLASSES:
        return named_task_family(spec)
    family = {}
    for part in spec.split(","):
        cls, _, weight = part.strip().partition(":")
        if cls not in TASK_CLASSES:
            raise ValueError(f"unknown task class {cls!r}")
        family[cls] = float(weight) if weight else 1.0
    return family


def enumerate_programs(task_class: str, colors=COLORS, shapes=SHAPES,
                       relations=RELATIONS, tags=TAGS):
    """All argument combinations of one class over restricted attribute sets."""
    n_colors, n_shapes, uses_rel, uses_tag = _SIGNATURES[task_class]
    color_choices = itertools.product(colors, repeat=n_colors)
    out = []
    for cs in color_choices:
        for ss in itertools.product(shapes, repeat=n_shapes):
            rels = relations if uses_rel else (None,)
            tgs = tags if uses_tag else (None,)
            for rel in rels:
                for tag in tgs:
                    out.append(QuestionProgram(
                        task_class, colors=tuple(cs), shapes=tuple(ss),
                        relation=rel, tag=tag,
                    ))
    return out
