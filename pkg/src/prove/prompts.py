"""Prompt construction.

Every template the system sends is pinned verbatim in a versioned JSON file
so experiments can be replayed against the exact wording that produced them.
Templates never rewrite the question or solution; they only frame them.
"""

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

DIRECT = "direct"
COT = "cot"
POT = "pot"
PS = "ps"
PS_BOXED = "ps_boxed"
STYLES = (DIRECT, COT, POT, PS, PS_BOXED)

NUMERIC = "numeric"
BOXED = "boxed"


def user_message(content: str) -> dict:
    return {"role": "user", "content": content}


def effective_style(style: str, gold_rule: str) -> str:
    # Boxed datasets need the boxed answer-format clause for extraction to work.
    if gold_rule == "boxed" and style == PS:
        return PS_BOXED
    return style


@dataclass(frozen=True)
class PromptKit:
    version: int
    styles: dict
    extraction: dict
    translation: dict

    @classmethod
    def load(cls, path: Optional[Path] = None) -> "PromptKit":
        if path is None:
            text = resources.files("prove").joinpath("data/prompts.json").read_text("utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        raw = json.loads(text)
        kit = cls(
            version=raw["version"],
            styles=dict(raw["styles"]),
            extraction=dict(raw["extraction"]),
            translation=dict(raw["translation"]),
        )
        missing = [s for s in STYLES if s not in kit.styles]
        if missing:
            raise ValueError(f"prompt file lacks styles: {', '.join(missing)}")
        return kit

    def solution_prompt(self, question: str, style: str) -> list:
        if not question.strip():
            raise ValueError("question must be nonempty")
        if style not in STYLES:
            raise ValueError(f"unknown prompt style {style!r}")
        return [user_message(f"{question}\n\n{self.styles[style]}")]

    def extraction_prompt(self, question: str, solution: str,
                          mode: str = NUMERIC) -> list:
        if not solution.strip():
            raise ValueError("solution must be nonempty")
        cue = self.extraction[mode]
        return [user_message(f"{question}\n\n{solution}\n{cue}")]

    def translation_prompt(self, question: str, solution: str,
                           boxed: bool = False) -> list:
        if not solution.strip():
            raise ValueError("solution must be nonempty")
        instruction = self.translation[BOXED if boxed else NUMERIC]
        return [user_message(f"{instruction}\n\n{question}\n\n{solution}")]
