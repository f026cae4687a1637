"""Regenerate the checked-in golden prompt files (run from the tests/ directory)."""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from fixtures import golden_prompt  # noqa: E402

GOLDEN_DIR = Path(__file__).parent / "golden"


def main() -> None:
    GOLDEN_DIR.mkdir(exist_ok=True)
    for fmt in ("align_after", "align_before", "tabular"):
        for label_config in ("source_only", "target_only", "label_aligned"):
            prompt_text = golden_prompt(fmt, label_config)
            path = GOLDEN_DIR / f"prompt_{fmt}_{label_config}.txt"
            path.write_text(prompt_text.prompt, encoding="utf-8")
            print(f"wrote {path} ({len(prompt_text.prompt)} chars)")


if __name__ == "__main__":
    main()
