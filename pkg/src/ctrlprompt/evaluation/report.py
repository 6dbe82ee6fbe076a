"""Metrics report container with JSON and plain-text renderings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

SECTIONS = ("classifier metrics", "similarity", "quality/diversity", "overlap", "explanations")


@dataclass
class MetricsReport:
    title: str = "metrics"
    sections: dict[str, object] = field(default_factory=dict)

    def add(self, section: str, content) -> None:
        self.sections[section] = content

    def to_dict(self) -> dict:
        return {"title": self.title, "sections": self.sections}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable)

    def to_text(self) -> str:
        lines = [f"# {self.title}"]
        for name in sorted(self.sections, key=_section_order):
            lines.append("")
            lines.append(f"## {name}")
            plain = json.loads(json.dumps(self.sections[name], default=_jsonable))
            lines.extend(_render(plain, 0))
        return "\n".join(lines) + "\n"

    def save(self, stem: str | Path) -> tuple[Path, Path]:
        stem = Path(stem)
        js, txt = stem.with_suffix(".json"), stem.with_suffix(".txt")
        js.write_text(self.to_json() + "\n", encoding="utf-8")
        txt.write_text(self.to_text(), encoding="utf-8")
        return js, txt


def _section_order(name: str):
    return (SECTIONS.index(name) if name in SECTIONS else len(SECTIONS), name)


def _jsonable(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if hasattr(obj, "__dataclass_fields__"):
        return {k: getattr(obj, k) for k in obj.__dataclass_fields__}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _render(obj, depth: int) -> list[str]:
    pad = "  " * depth
    if isinstance(obj, dict):
        out = []
        for k, v in obj.items():
            if isinstance(v, (dict, list)):
                out.append(f"{pad}{k}:")
                out.extend(_render(v, depth + 1))
            else:
                out.append(f"{pad}{k}: {_fmt(v)}")
        return out
    if isinstance(obj, list):
        out = []
        for v in obj:
            if isinstance(v, dict) and set(v) == {"token", "weight"}:
                out.append(f"{pad}{v['token']}\t{v['weight']:+.4f}")
            else:
                out.extend(_render(v, depth) if isinstance(v, (dict, list)) else [f"{pad}- {_fmt(v)}"])
        return out
    return [f"{pad}{_fmt(obj)}"]
