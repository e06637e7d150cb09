"""Line-oriented ``.ssg`` text format.

::

    ssg 1
    states 4
    initial 0
    goal 2
    minimizer 0 3
    action 0 a
      -> 1 1
    action 1 c
      -> 2 0.5
      -> 3 0.5

``#`` starts a comment.  States not listed after ``minimizer`` belong to the
Maximizer.  Probabilities are written with 17 significant digits so that
parsing a serialized model gives back identical floats.
"""

from __future__ import annotations

from pathlib import Path

from ssgvi.model import (
    Action,
    Distribution,
    Player,
    SsgModel,
    UsageError,
    ValidationReport,
    validate_model,
)


class ModelFormatError(UsageError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class ModelValidationError(UsageError):
    def __init__(self, report: ValidationReport):
        super().__init__(f"invalid model: {report}")
        self.report = report


def _ints(tokens: list[str], line: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ModelFormatError(line, f"expected integers, got {' '.join(tokens)!r}") from None


def parse_model(text: str) -> SsgModel:
    n = initial = None
    goals: list[int] = []
    minimizer: set[int] = set()
    # (state, label, [(target, prob)], line)
    pending: list[tuple[int, str, list[tuple[int, float]], int]] = []
    seen_header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0]
        if not seen_header:
            if tok != ["ssg", "1"]:
                raise ModelFormatError(lineno, "expected header 'ssg 1'")
            seen_header = True
            continue
        if key == "states":
            if len(tok) != 2:
                raise ModelFormatError(lineno, "usage: states N")
            (n,) = _ints(tok[1:], lineno)
        elif key == "initial":
            if len(tok) != 2:
                raise ModelFormatError(lineno, "usage: initial I")
            (initial,) = _ints(tok[1:], lineno)
        elif key == "goal":
            goals.extend(_ints(tok[1:], lineno))
        elif key == "minimizer":
            minimizer.update(_ints(tok[1:], lineno))
        elif key == "action":
            if len(tok) != 3:
                raise ModelFormatError(lineno, "usage: action S LABEL")
            (s,) = _ints(tok[1:2], lineno)
            pending.append((s, tok[2], [], lineno))
        elif key == "->":
            if not pending:
                raise ModelFormatError(lineno, "transition outside of an action")
            if len(tok) != 3:
                raise ModelFormatError(lineno, "usage: -> T P")
            (t,) = _ints(tok[1:2], lineno)
            try:
                p = float(tok[2])
            except ValueError:
                raise ModelFormatError(lineno, f"bad probability {tok[2]!r}") from None
            pending[-1][2].append((t, p))
        else:
            raise ModelFormatError(lineno, f"unknown keyword {key!r}")
    if not seen_header:
        raise ModelFormatError(1, "empty input")
    if n is None or initial is None:
        raise ModelFormatError(lineno, "missing 'states' or 'initial'")
    if n < 1:
        raise ModelFormatError(lineno, "states must be positive")
    rows: list[list[Action]] = [[] for _ in range(n)]
    for s, label, pairs, line in pending:
        if not 0 <= s < n:
            raise ModelFormatError(line, f"action of unknown state {s}")
        if not pairs:
            raise ModelFormatError(line, f"action {label!r} of state {s} has no transitions")
        rows[s].append(Action(label, Distribution.from_pairs(pairs)))
    for g in goals:
        if not 0 <= g < n:
            raise ModelFormatError(lineno, f"goal state {g} out of range")
    owner = [Player.MIN if s in minimizer else Player.MAX for s in range(n)]
    model = SsgModel.build(n, owner, rows, initial, goals)
    report = validate_model(model)
    if not report.ok:
        raise ModelValidationError(report)
    return model


def serialize_model(model: SsgModel) -> str:
    out = [
        "ssg 1",
        f"states {model.n}",
        f"initial {model.initial}",
        "goal " + " ".join(str(g) for g in sorted(model.goals)),
        "minimizer " + " ".join(str(s) for s in range(model.n) if model.owner[s] == Player.MIN),
    ]
    for s, acts in enumerate(model.actions):
        for act in acts:
            if not act.label or any(c.isspace() for c in act.label) or "#" in act.label:
                raise UsageError(f"action label {act.label!r} of state {s} cannot be serialized")
            out.append(f"action {s} {act.label}")
            for t, p in act.dist:
                out.append(f"  -> {t} {p:.17g}")
    return "\n".join(line.rstrip() for line in out) + "\n"


def load_model(path: str | Path) -> SsgModel:
    return parse_model(Path(path).read_text())


def save_model(model: SsgModel, path: str | Path) -> None:
    Path(path).write_text(serialize_model(model))
