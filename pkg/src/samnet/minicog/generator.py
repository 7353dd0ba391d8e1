"""Deterministic episode generation.

Every episode is a pure function of (config, task family, seed). A per-class
planner scripts the referent objects frame by frame (flipping balance coins
for the intended answers) while the driver fills in distractors that never
match any referent descriptor of the question. Answers always come from the
oracle afterwards, never from the planner's intent, and the driver verifies
that widening the look-back window to the whole episode would not change
them; construction is retried a bounded number of times when a constraint
cannot be met, then reported as a generation error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .oracle import oracle_answer
from .programs import (
    ANSWER_INDEX,
    ANSWERS,
    QuestionProgram,
    RELATIONS,
    TAGS,
    TASK_CLASSES,
    VOCABULARY,
    _SIGNATURES,
    encode_tokens,
)
from .scenes import (
    COLOR_INDEX,
    COLORS,
    FeatureFamily,
    SHAPE_INDEX,
    SHAPES,
    SceneGraph,
    SceneObject,
    render_symbolic,
)

GENERATOR_VERSION = "minicog-1"

_MAX_ATTEMPTS = 64

# balance/ presence coins shared by the planners
_P_EXIST = 0.5
_P_REF = 0.85
_P_PAST = 0.7


class GenerationError(RuntimeError):
    pass


class _PlanFailure(Exception):
    pass


@dataclass(frozen=True)
class EpisodeConfig:
    height: int = 5
    width: int = 5
    frames: int = 4
    history: int = 3
    distractors: int = 1
    max_objects: int = 6
    family_name: str = "any"

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError("episode needs at least one frame")
        if not 0 <= self.history <= self.frames - 1:
            raise ValueError(
                f"history {self.history} outside [0, frames-1={self.frames - 1}]"
            )
        if self.height < 1 or self.width < 1:
            raise ValueError("grid extents must be positive")
        if self.distractors < 0 or self.max_objects < 1:
            raise ValueError("distractors must be >= 0 and max_objects >= 1")
        FeatureFamily.by_name(self.family_name)

    @property
    def family(self) -> FeatureFamily:
        return FeatureFamily.by_name(self.family_name)

    def to_dict(self) -> dict:
        return {
            "height": self.height, "width": self.width, "frames": self.frames,
            "history": self.history, "distractors": self.distractors,
            "max_objects": self.max_objects, "family_name": self.family_name,
        }

    @staticmethod
    def from_dict(d: dict) -> "EpisodeConfig":
        return EpisodeConfig(**d)


@dataclass(frozen=True)
class Episode:
    config: EpisodeConfig
    seed: int
    program: QuestionProgram
    scenes: tuple[SceneGraph, ...]
    answers: tuple[str, ...]
    tokens: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        if len(self.answers) != len(self.scenes):
            raise ValueError("one answer per frame required")
        object.__setattr__(self, "tokens", tuple(self.program.tokens()))

    @property
    def token_ids(self) -> list[int]:
        return encode_tokens(self.tokens)

    @property
    def answer_ids(self) -> list[int]:
        return [ANSWER_INDEX[a] for a in self.answers]

    def frames_symbolic(self) -> np.ndarray:
        return np.stack([render_symbolic(s) for s in self.scenes])


def _pick(rng, items):
    if not items:
        raise _PlanFailure("empty choice pool")
    return items[int(rng.integers(len(items)))]


def _coin(rng, p) -> bool:
    return rng.random() < p


def _matches_desc(color, shape, desc) -> bool:
    dc, ds = desc
    return (dc is None or dc == color) and (ds is None or ds == shape)


@dataclass
class _FramePlan:
    planned: list  # SceneObject
    forbidden: list  # descriptors (color|None, shape|None); None,None matches all
    region_rules: list = field(default_factory=list)  # (cells, descriptor)

    def allows(self, row, col, color, shape) -> bool:
        if any(_matches_desc(color, shape, d) for d in self.forbidden):
            return False
        for cells, desc in self.region_rules:
            if (row, col) in cells and _matches_desc(color, shape, desc):
                return False
        return True


class _Planner:
    """Base class: script referents per frame, observe the completed scene."""

    def __init__(self, rng, cfg: EpisodeConfig, program: QuestionProgram):
        self.rng = rng
        self.cfg = cfg
        self.family = cfg.family
        self.program = program

    def plan(self, k: int) -> _FramePlan:
        raise NotImplementedError

    def observe(self, k: int, scene: SceneGraph) -> None:
        pass

    # -- shared helpers -------------------------------------------------
    def free_cell(self, taken, plan: _FramePlan | None = None,
                  cells=None):
        pool = [
            (r, c)
            for r in range(self.cfg.height)
            for c in range(self.cfg.width)
            if (r, c) not in taken
        ]
        if cells is not None:
            pool = [rc for rc in pool if rc in cells]
        return _pick(self.rng, pool)

    def legal_pair(self, exclude=(), colors=None, shapes=None):
        pool = [
            (c, s) for (c, s) in self.family.pairs()
            if (colors is None or c in colors)
            and (shapes is None or s in shapes)
            and (c, s) not in exclude
        ]
        return _pick(self.rng, pool)

    def place(self, objs, taken, color, shape, cells=None):
        row, col = self.free_cell(taken, cells=cells)
        obj = SceneObject(row, col, color, shape)
        objs.append(obj)
        taken.add((row, col))
        return obj


class _ExistPlanner(_Planner):
    """Exist / ExistColor / ExistShape with a temporal tag.

    Window scopes say "true" as soon as any scoped frame matches, which
    inflates the true rate; an episode-level empty variant (no matching
    object in any frame) rebalances last/latest questions toward 50/50.
    """

    def __init__(self, rng, cfg, program):
        super().__init__(rng, cfg, program)
        empty_prob = {"now": 0.0, "latest": 0.4, "last": 0.3}[program.tag]
        self.empty_episode = _coin(rng, empty_prob)

    def plan(self, k):
        cls = self.program.task_class
        objs, taken = [], set()
        if not self.empty_episode and _coin(self.rng, _P_EXIST):
            if cls == "ExistColor":
                color = self.program.colors[0]
                shape = _pick(self.rng, list(self.family.shapes_for(color)))
            elif cls == "ExistShape":
                shape = self.program.shapes[0]
                color = _pick(self.rng, list(self.family.colors_for(shape)))
            else:
                color, shape = self.legal_pair()
            self.place(objs, taken, color, shape)
        if cls == "ExistColor":
            forbidden = [(self.program.colors[0], None)]
        elif cls == "ExistShape":
            forbidden = [(None, self.program.shapes[0])]
        else:
            forbidden = [(None, None)]  # any object would satisfy the question
        return _FramePlan(objs, forbidden)


class _GetPlanner(_Planner):
    """GetColor(shape) / GetShape(color) with a temporal tag."""

    def plan(self, k):
        cls = self.program.task_class
        objs, taken = [], set()
        if _coin(self.rng, _P_REF):
            if cls == "GetColor":
                shape = self.program.shapes[0]
                color = _pick(self.rng, list(self.family.colors_for(shape)))
                forbidden = [(None, shape)]
            else:
                color = self.program.colors[0]
                shape = _pick(self.rng, list(self.family.shapes_for(color)))
                forbidden = [(color, None)]
            self.place(objs, taken, color, shape)
        else:
            forbidden = (
                [(None, self.program.shapes[0])] if cls == "GetColor"
                else [(self.program.colors[0], None)]
            )
        return _FramePlan(objs, forbidden)


class _SimpleComparePlanner(_Planner):
    """Within-frame attribute comparison of referent pairs."""

    def _pairs(self):
        p = self.program
        if p.task_class.endswith("Color"):
            keys = p.shapes  # referents keyed by shape, compare colors
        else:
            keys = p.colors
        return [(keys[i], keys[i + 1]) for i in range(0, len(keys), 2)]

    def plan(self, k):
        by_shape = self.program.task_class.endswith("Color")
        objs, taken = [], set()
        for key1, key2 in self._pairs():
            have1 = _coin(self.rng, 0.9)
            have2 = _coin(self.rng, 0.9)
            values = self._choose_values(key1, key2)
            if have1:
                c, s = (values[0], key1) if by_shape else (key1, values[0])
                self.place(objs, taken, c, s)
            if have2:
                c, s = (values[1], key2) if by_shape else (key2, values[1])
                self.place(objs, taken, c, s)
        forbidden = [
            ((None, key) if by_shape else (key, None))
            for pair in self._pairs() for key in pair
        ]
        return _FramePlan(objs, forbidden)

    def _choose_values(self, key1, key2):
        by_shape = self.program.task_class.endswith("Color")
        if by_shape:
            pool1 = list(self.family.colors_for(key1))
            pool2 = list(self.family.colors_for(key2))
        else:
            pool1 = list(self.family.shapes_for(key1))
            pool2 = list(self.family.shapes_for(key2))
        shared = [v for v in pool1 if v in pool2]
        if _coin(self.rng, 0.5) and shared:
            v = _pick(self.rng, shared)
            return v, v
        v1 = _pick(self.rng, pool1)
        rest = [v for v in pool2 if v != v1]
        return v1, _pick(self.rng, rest) if rest else v1


class _ComparePlanner(_Planner):
    """Now-vs-last attribute comparison; referent state tracked per pair."""

    def __init__(self, rng, cfg, program):
        super().__init__(rng, cfg, program)
        self.by_shape = program.task_class.endswith("Color")
        keys = program.shapes if self.by_shape else program.colors
        self.pairs = [(keys[i], keys[i + 1]) for i in range(0, len(keys), 2)]
        # most recent past value per pair, as (frame_index, value)
        self.past: list[tuple[int, str] | None] = [None] * len(self.pairs)

    def _value_pool(self, key):
        return list(
            self.family.colors_for(key) if self.by_shape
            else self.family.shapes_for(key)
        )

    def plan(self, k):
        objs, taken = [], set()
        for idx, (key_now, key_last) in enumerate(self.pairs):
            visible = self.past[idx]
            if visible is not None and visible[0] < k - self.cfg.history:
                visible = None
            if _coin(self.rng, _P_REF):
                pool = self._value_pool(key_now)
                if visible is not None and _coin(self.rng, 0.5) and visible[1] in pool:
                    value = visible[1]
                else:
                    rest = [v for v in pool if visible is None or v != visible[1]]
                    value = _pick(self.rng, rest or pool)
                c, s = (value, key_now) if self.by_shape else (key_now, value)
                self.place(objs, taken, c, s)
            if _coin(self.rng, _P_PAST):
                value = _pick(self.rng, self._value_pool(key_last))
                c, s = (value, key_last) if self.by_shape else (key_last, value)
                self.place(objs, taken, c, s)
                self.past[idx] = (k, value)
        forbidden = [
            ((None, key) if self.by_shape else (key, None))
            for pair in self.pairs for key in pair
        ]
        return _FramePlan(objs, forbidden)


class _ExistOfPlanner(_Planner):
    """ExistColorOf / ExistShapeOf: another object sharing the latest
    referent's attribute, and the strictly-past Cognitive variants."""

    def __init__(self, rng, cfg, program):
        super().__init__(rng, cfg, program)
        cls = program.task_class
        self.by_shape = cls in ("ExistColorOf", "ExistLastColorSameShape")
        self.strict_past = cls.startswith("ExistLast")
        self.key = program.shapes[0] if self.by_shape else program.colors[0]
        self.latest: tuple[int, str] | None = None  # (frame, attribute value)

    def _ref_pool(self):
        return list(
            self.family.colors_for(self.key) if self.by_shape
            else self.family.shapes_for(self.key)
        )

    def _witness(self, objs, taken, value, avoid=False, frame_forbidden=None):
        # a non-referent object carrying (or avoiding) the referent's value
        if self.by_shape:
            shapes = [s for s in self.family.shapes_for(value) if s != self.key]
            if not avoid and shapes:
                self.place(objs, taken, value, _pick(self.rng, shapes))
            elif avoid:
                frame_forbidden.append((value, None))
        else:
            colors = [c for c in self.family.colors_for(value) if c != self.key]
            if not avoid and colors:
                self.place(objs, taken, _pick(self.rng, colors), value)
            elif avoid:
                frame_forbidden.append((None, value))

    def plan(self, k):
        objs, taken = [], set()
        frame_forbidden = [
            (None, self.key) if self.by_shape else (self.key, None)
        ]
        visible = self.latest
        if visible is not None and visible[0] < k - self.cfg.history:
            visible = None
        ref_value = None
        place_ref = _coin(self.rng, _P_REF)
        want_true = _coin(self.rng, _P_EXIST)
        if self.strict_past:
            ref_value = visible[1] if visible is not None else None
        if place_ref:
            pool = self._ref_pool()
            if self.strict_past and ref_value is not None and not want_true:
                pool = [v for v in pool if v != ref_value] or pool
            new_value = _pick(self.rng, pool)
            c, s = (new_value, self.key) if self.by_shape else (self.key, new_value)
            self.place(objs, taken, c, s)
            self.latest = (k, new_value)
            if not self.strict_past:
                ref_value = new_value
        elif not self.strict_past:
            ref_value = visible[1] if visible is not None else None
        if ref_value is not None:
            self._witness(objs, taken, ref_value, avoid=not want_true,
                          frame_forbidden=frame_forbidden)
        return _FramePlan(objs, frame_forbidden)


class _SameObjectPlanner(_Planner):
    """ExistLastObjectSameObject: did anything from the previous frame reappear."""

    def __init__(self, rng, cfg, program):
        super().__init__(rng, cfg, program)
        self.prev_pairs: set[tuple[str, str]] = set()

    def plan(self, k):
        objs, taken = [], set()
        frame_forbidden = []
        if k == 0 or not self.prev_pairs:
            color, shape = self.legal_pair()
            self.place(objs, taken, color, shape)
        elif _coin(self.rng, _P_EXIST):
            color, shape = _pick(self.rng, sorted(self.prev_pairs))
            self.place(objs, taken, color, shape)
        else:
            color, shape = self.legal_pair(exclude=self.prev_pairs)
            self.place(objs, taken, color, shape)
            frame_forbidden = [pair for pair in sorted(self.prev_pairs)]
        return _FramePlan(objs, frame_forbidden)

    def observe(self, k, scene):
        self.prev_pairs = {(o.color, o.shape) for o in scene.objects}


class _SpatialPlanner(_Planner):
    """Single-frame relations against a uniquely described reference object."""

    def __init__(self, rng, cfg, program):
        super().__init__(rng, cfg, program)
        self.ref_pair = (program.colors[-1], program.shapes[-1])
        self.relation = program.relation
        cls = program.task_class
        self.kind = "exist" if cls == "ExistSpace" else (
            "color" if cls == "ExistColorSpace" else
            "shape" if cls == "ExistShapeSpace" else "get"
        )
        self.get_color = cls == "GetColorSpace"

    def _region(self, row, col):
        h, w, rel = self.cfg.height, self.cfg.width, self.relation
        if rel == "left":
            return {(r, c) for r in range(h) for c in range(col)}
        if rel == "right":
            return {(r, c) for r in range(h) for c in range(col + 1, w)}
        if rel == "above":
            return {(r, c) for r in range(row) for c in range(w)}
        return {(r, c) for r in range(row + 1, h) for c in range(w)}

    def plan(self, k):
        objs, taken = [], set()
        forbidden = [self.ref_pair]
        rules = []
        if not _coin(self.rng, _P_REF):
            return _FramePlan(objs, forbidden)
        want_true = _coin(self.rng, _P_EXIST)
        cells = [
            (r, c) for r in range(self.cfg.height) for c in range(self.cfg.width)
        ]
        if want_true:
            cells = [rc for rc in cells if self._region(*rc)]
            if not cells:
                raise _PlanFailure(
                    f"no reference cell admits relation {self.relation!r}"
                )
        row, col = _pick(self.rng, cells)
        ref = SceneObject(row, col, *self.ref_pair)
        objs.append(ref)
        taken.add((row, col))
        region = self._region(row, col)
        if self.kind == "exist":
            if want_true:
                color, shape = self.legal_pair(exclude=(self.ref_pair,))
                self.place(objs, taken, color, shape, cells=region)
            else:
                rules.append((region, (None, None)))
        elif self.kind in ("color", "shape"):
            query = (
                self.program.colors[0] if self.kind == "color"
                else self.program.shapes[0]
            )
            if want_true:
                if self.kind == "color":
                    pool = [
                        (query, s) for s in self.family.shapes_for(query)
                        if (query, s) != self.ref_pair
                    ]
                else:
                    pool = [
                        (c, query) for c in self.family.colors_for(query)
                        if (c, query) != self.ref_pair
                    ]
                color, shape = _pick(self.rng, pool)
                self.place(objs, taken, color, shape, cells=region)
            rules.append((
                region,
                (query, None) if self.kind == "color" else (None, query),
            ))
        else:  # Get*Space: at most one object inside the region
            if want_true:
                color, shape = self.legal_pair(exclude=(self.ref_pair,))
                self.place(objs, taken, color, shape, cells=region)
            rules.append((region, (None, None)))
        return _FramePlan(objs, forbidden, rules)


_PLANNERS = {
    "Exist": _ExistPlanner, "ExistColor": _ExistPlanner,
    "ExistShape": _ExistPlanner,
    "GetColor": _GetPlanner, "GetShape": _GetPlanner,
    "SimpleCompareColor": _SimpleComparePlanner,
    "SimpleCompareShape": _SimpleComparePlanner,
    "AndSimpleCompareColor": _SimpleComparePlanner,
    "AndSimpleCompareShape": _SimpleComparePlanner,
    "CompareColor": _ComparePlanner, "CompareShape": _ComparePlanner,
    "AndCompareColor": _ComparePlanner, "AndCompareShape": _ComparePlanner,
    "ExistColorOf": _ExistOfPlanner, "ExistShapeOf": _ExistOfPlanner,
    "ExistLastColorSameShape": _ExistOfPlanner,
    "ExistLastShapeSameColor": _ExistOfPlanner,
    "ExistSpace": _SpatialPlanner, "ExistColorSpace": _SpatialPlanner,
    "ExistShapeSpace": _SpatialPlanner,
    "GetColorSpace": _SpatialPlanner, "GetShapeSpace": _SpatialPlanner,
    "ExistLastObjectSameObject": _SameObjectPlanner,
}


def _sample_program(rng, cfg: EpisodeConfig, task_family) -> QuestionProgram:
    classes = sorted(task_family)
    unknown = [c for c in classes if c not in TASK_CLASSES]
    if unknown:
        raise ValueError(f"unknown task classes {unknown}")
    weights = np.array([task_family[c] for c in classes], dtype=np.float64)
    if weights.min() < 0 or weights.sum() <= 0:
        raise ValueError("task family weights must be non-negative, sum > 0")
    cls = classes[int(rng.choice(len(classes), p=weights / weights.sum()))]
    fam = cfg.family

    def color():
        return COLORS[int(rng.integers(len(COLORS)))]

    def shape():
        return SHAPES[int(rng.integers(len(SHAPES)))]

    def distinct(pool_fn, n):
        out = []
        while len(out) < n:
            v = pool_fn()
            if v not in out:
                out.append(v)
        return tuple(out)

    tag = TAGS[int(rng.integers(len(TAGS)))]
    rel = RELATIONS[int(rng.integers(len(RELATIONS)))]
    n_colors, n_shapes, uses_rel, uses_tag = _SIGNATURES[cls]
    colors: tuple = ()
    shapes: tuple = ()
    if cls in ("ExistSpace", "ExistColorSpace", "ExistShapeSpace",
               "GetColorSpace", "GetShapeSpace"):
        # reference descriptor must be realizable under the family constraint
        ref_c, ref_s = fam.pairs()[int(rng.integers(len(fam.pairs())))]
        if cls in ("ExistSpace", "GetColorSpace", "GetShapeSpace"):
            colors, shapes = (ref_c,), (ref_s,)
        elif cls == "ExistColorSpace":
            colors, shapes = (color(), ref_c), (ref_s,)
        else:
            colors, shapes = (ref_c,), (shape(), ref_s)
    else:
        if n_shapes:
            shapes = distinct(shape, n_shapes)
        if n_colors:
            colors = distinct(color, n_colors)
    return QuestionProgram(cls, colors=colors, shapes=shapes,
                           relation=rel if uses_rel else None,
                           tag=tag if uses_tag else None)


def _fill_distractors(rng, cfg: EpisodeConfig, family, plan: _FramePlan):
    objs = list(plan.planned)
    if len(objs) > cfg.max_objects:
        raise _PlanFailure(
            f"{len(objs)} scripted objects exceed max_objects={cfg.max_objects}"
        )
    taken = {(o.row, o.col) for o in objs}
    budget = min(cfg.distractors, cfg.max_objects - len(objs))
    pairs = family.pairs()
    for _ in range(budget):
        cells = [
            (r, c) for r in range(cfg.height) for c in range(cfg.width)
            if (r, c) not in taken
        ]
        rng.shuffle(cells)
        placed = False
        for row, col in cells:
            options = [
                (c, s) for (c, s) in pairs if plan.allows(row, col, c, s)
            ]
            if options:
                color, shp = options[int(rng.integers(len(options)))]
                objs.append(SceneObject(row, col, color, shp))
                taken.add((row, col))
                placed = True
                break
        if not placed:
            break  # constraints leave no room; fewer distractors, not an error
    objs.sort(key=lambda o: (o.row, o.col))
    return SceneGraph(cfg.height, cfg.width, tuple(objs))


def gen_episode(cfg: EpisodeConfig, task_family, seed) -> Episode:
    """Generate one episode, deterministic in (cfg, task_family, seed)."""
    rng = np.random.default_rng(seed)
    last_failure = "construction failed"
    for _ in range(_MAX_ATTEMPTS):
        try:
            program = _sample_program(rng, cfg, task_family)
            planner = _PLANNERS[program.task_class](rng, cfg, program)
            scenes = []
            for k in range(cfg.frames):
                plan = planner.plan(k)
                scene = _fill_distractors(rng, cfg, cfg.family, plan)
                planner.observe(k, scene)
                scenes.append(scene)
            answers = oracle_answer(program, scenes, cfg.history)
            full = oracle_answer(program, scenes, cfg.frames - 1)
            if answers != full:
                last_failure = "answers depend on frames beyond the history window"
                continue
        except _PlanFailure as exc:
            last_failure = str(exc)
            continue
        seed_int = int(np.asarray(seed).reshape(-1)[-1]) if not isinstance(seed, int) else seed
        return Episode(cfg, seed_int, program, tuple(scenes), tuple(answers))
    raise GenerationError(
        f"could not generate an episode for {cfg} after {_MAX_ATTEMPTS} attempts: "
        f"{last_failure}"
    )


def episode_stream(cfg: EpisodeConfig, task_family, seed: int, start: int = 0):
    """Infinite deterministic stream; episode i uses sub-seed (seed, i)."""
    i = start
    while True:
        yield gen_episode(cfg, task_family, [seed, i])
        i += 1


def generate_corpus(cfg: EpisodeConfig, task_family, count: int, seed: int):
    stream = episode_stream(cfg, task_family, seed)
    return [next(stream) for _ in range(count)]


def write_corpus(path, episodes, cfg: EpisodeConfig, task_family, seed: int) -> None:
    """Line-delimited corpus with a self-describing header record."""
    header = {
        "format": "episode-corpus",
        "version": GENERATOR_VERSION,
        "config": cfg.to_dict(),
        "task_family": {k: task_family[k] for k in sorted(task_family)},
        "seed": seed,
        "count": len(episodes),
        "vocabulary": list(VOCABULARY),
        "answers": list(ANSWERS),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for ep in episodes:
            record = {
                "seed": ep.seed,
                "program": ep.program.to_dict(),
                "token_ids": ep.token_ids,
                "scenes": [
                    [[o.row, o.col, COLOR_INDEX[o.color], SHAPE_INDEX[o.shape]]
                     for o in scene.objects]
                    for scene in ep.scenes
                ],
                "answer_ids": ep.answer_ids,
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_corpus(path):
    """Load a corpus; returns (episodes, header)."""
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "episode-corpus":
            raise ValueError(f"{path} is not an episode corpus")
        cfg = EpisodeConfig.from_dict(header["config"])
        episodes = []
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            scenes = tuple(
                SceneGraph(cfg.height, cfg.width, tuple(
                    SceneObject(r, c, COLORS[ci], SHAPES[si])
                    for r, c, ci, si in scene
                ))
                for scene in rec["scenes"]
            )
            answers = tuple(ANSWERS[i] for i in rec["answer_ids"])
            episodes.append(Episode(
                cfg, rec["seed"], QuestionProgram.from_dict(rec["program"]),
                scenes, answers,
            ))
    return episodes, header
