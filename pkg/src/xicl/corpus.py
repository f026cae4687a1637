"""Dataset ingestion: labeled exemplar stores, parallel stores, eval sets, label maps.

File format is JSONL, one record per line. Labeled records carry either a
`text` field (sentiment / topic) or `premise` + `hypothesis` fields (nli).
Labels in files are always the canonical English strings; the per-language
strings from the embedded label tables are a rendering concern.

Loaded stores are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MissingLabelSetError, ParseError, ValidationError
from .labels import CANONICAL_LANG, LABEL_TABLES, LANGUAGE_NAMES, TASKS

_CODE_RE = re.compile(r"^[a-z]{3}$")


@dataclass(frozen=True)
class LanguageTag:
    code: str
    display_name: str

    def __post_init__(self):
        if not _CODE_RE.match(self.code):
            raise ValidationError(f"language code must match [a-z]{{3}}, got {self.code!r}")
        if not self.display_name:
            raise ValidationError(f"language {self.code!r} needs a non-empty display name")


def language(code: str) -> LanguageTag:
    """Look up a LanguageTag by code, using the registry for the display name."""
    name = LANGUAGE_NAMES.get(code)
    if name is None:
        raise ValidationError(f"unknown language code {code!r}; construct a LanguageTag explicitly")
    return LanguageTag(code, name)


@dataclass(frozen=True)
class LabeledExample:
    id: str
    label: str
    language: LanguageTag
    text: str | None = None
    premise: str | None = None
    hypothesis: str | None = None

    def __post_init__(self):
        if self.text is not None:
            if not self.text:
                raise ValidationError(f"example {self.id!r}: text must be non-empty")
        else:
            if not self.premise or not self.hypothesis:
                raise ValidationError(
                    f"example {self.id!r}: needs non-empty text, or premise and hypothesis"
                )

    def content_text(self) -> str:
        """Single string used for similarity; NLI joins premise and hypothesis."""
        if self.text is not None:
            return self.text
        return f"{self.premise} {self.hypothesis}"

    def to_json_obj(self) -> dict:
        obj: dict = {"id": self.id}
        if self.text is not None:
            obj["text"] = self.text
        else:
            obj["premise"] = self.premise
            obj["hypothesis"] = self.hypothesis
        obj["label"] = self.label
        obj["language"] = self.language.code
        return obj


@dataclass(frozen=True)
class ParallelPair:
    id: str
    source_text: str
    target_text: str
    source_lang: LanguageTag
    target_lang: LanguageTag
    label: str | None = None

    def __post_init__(self):
        if not self.source_text or not self.target_text:
            raise ValidationError(f"pair {self.id!r}: both texts must be non-empty")
        if self.source_lang.code == self.target_lang.code:
            raise ValidationError(
                f"pair {self.id!r}: source_lang and target_lang are both {self.source_lang.code!r}"
            )

    def to_json_obj(self) -> dict:
        obj = {
            "id": self.id,
            "source_text": self.source_text,
            "target_text": self.target_text,
            "source_lang": self.source_lang.code,
            "target_lang": self.target_lang.code,
        }
        if self.label is not None:
            obj["label"] = self.label
        return obj


@dataclass(frozen=True)
class LabelSet:
    """Index-aligned label lists for one task; canonical order is the English list."""

    task: str
    languages: dict[str, list[str]]

    def __post_init__(self):
        if CANONICAL_LANG not in self.languages:
            raise ValidationError(f"label set for {self.task!r} must include {CANONICAL_LANG!r}")
        k = len(self.languages[CANONICAL_LANG])
        for code, labels in self.languages.items():
            if len(labels) != k:
                raise ValidationError(
                    f"label set for {self.task!r}: {code!r} has {len(labels)} labels, expected {k}"
                )
            if len(set(labels)) != len(labels):
                raise ValidationError(f"label set for {self.task!r}: duplicate labels in {code!r}")

    @property
    def canonical(self) -> list[str]:
        return self.languages[CANONICAL_LANG]

    def index_of(self, canonical_label: str) -> int:
        try:
            return self.canonical.index(canonical_label)
        except ValueError:
            raise ValidationError(
                f"label {canonical_label!r} is not in the {self.task} label set {self.canonical}"
            ) from None

    def for_language(self, code: str) -> list[str]:
        labels = self.languages.get(code)
        if labels is None:
            raise MissingLabelSetError(code, self.task)
        return labels


def label_set(task: str) -> LabelSet:
    """The embedded LabelSet for a task, restricted to languages with real entries."""
    if task not in TASKS:
        raise ValidationError(f"unknown task {task!r}; expected one of {TASKS}")
    table = LABEL_TABLES[task]
    return LabelSet(task, {code: labels for code, labels in table.items() if labels is not None})


def label_map(task: str, lang: LanguageTag | str) -> list[str]:
    """Ordered label list for (task, language); raises MissingLabelSetError on gaps."""
    code = lang.code if isinstance(lang, LanguageTag) else lang
    if task not in TASKS:
        raise ValidationError(f"unknown task {task!r}; expected one of {TASKS}")
    labels = LABEL_TABLES[task].get(code)
    if labels is None:
        raise MissingLabelSetError(code, task)
    return list(labels)


def _iter_jsonl(path: Path):
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise ValidationError(f"no such file: {path}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not valid UTF-8: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{exc.msg}", line=lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("record is not a JSON object", line=lineno)
        yield lineno, obj


def load_labeled(path: str | Path, task: str) -> list[LabeledExample]:
    """Load a JSONL exemplar/eval file, validating labels against the task's label set."""
    labels = label_map(task, CANONICAL_LANG)
    out: list[LabeledExample] = []
    for lineno, obj in _iter_jsonl(Path(path)):
        try:
            label = obj["label"]
            lang = language(obj["language"])
            if label not in labels:
                raise ValidationError(
                    f"unknown label {label!r} for task {task!r}; expected one of {labels}"
                )
            example = LabeledExample(
                id=str(obj.get("id", lineno)),
                label=label,
                language=lang,
                text=obj.get("text"),
                premise=obj.get("premise"),
                hypothesis=obj.get("hypothesis"),
            )
        except KeyError as exc:
            raise ParseError(f"missing field {exc.args[0]!r}", line=lineno) from None
        except ValidationError as exc:
            raise ParseError(str(exc), line=lineno) from None
        out.append(example)
    return out


def load_parallel(path: str | Path) -> list[ParallelPair]:
    """Load a JSONL parallel-pair file; the label field is optional."""
    out: list[ParallelPair] = []
    for lineno, obj in _iter_jsonl(Path(path)):
        try:
            pair = ParallelPair(
                id=str(obj.get("id", lineno)),
                source_text=obj["source_text"],
                target_text=obj["target_text"],
                source_lang=language(obj["source_lang"]),
                target_lang=language(obj["target_lang"]),
                label=obj.get("label"),
            )
        except KeyError as exc:
            raise ParseError(f"missing field {exc.args[0]!r}", line=lineno) from None
        except ValidationError as exc:
            raise ParseError(str(exc), line=lineno) from None
        out.append(pair)
    return out


def dump_labeled(examples: list[LabeledExample]) -> str:
    return "".join(json.dumps(e.to_json_obj(), ensure_ascii=False) + "\n" for e in examples)


def dump_parallel(pairs: list[ParallelPair]) -> str:
    return "".join(json.dumps(p.to_json_obj(), ensure_ascii=False) + "\n" for p in pairs)


@dataclass(frozen=True)
class DatasetBundle:
    task: str
    exemplar_store: list[LabeledExample] = field(default_factory=list)
    parallel_store: list[ParallelPair] = field(default_factory=list)
    eval_set: list[LabeledExample] = field(default_factory=list)
    label_sets: LabelSet | None = None

    def __post_init__(self):
        sets = self.label_sets or label_set(self.task)
        object.__setattr__(self, "label_sets", sets)
        for ex in list(self.exemplar_store) + list(self.eval_set):
            if ex.label not in sets.canonical:
                raise ValidationError(
                    f"label {ex.label!r} (example {ex.id!r}) is not in the {self.task} label set"
                )
        for pair in self.parallel_store:
            if pair.label is not None and pair.label not in sets.canonical:
                raise ValidationError(
                    f"label {pair.label!r} (pair {pair.id!r}) is not in the {self.task} label set"
                )
        langs = {ex.language.code for ex in self.eval_set}
        if len(langs) > 1:
            raise ValidationError(f"eval set mixes languages: {sorted(langs)}")

    @property
    def eval_language(self) -> LanguageTag | None:
        return self.eval_set[0].language if self.eval_set else None

    def labeled_parallel(self) -> list[ParallelPair]:
        return [p for p in self.parallel_store if p.label is not None]


MANIFEST_NAME = "manifest.json"
_BUNDLE_FILES = ("exemplars.jsonl", "parallel.jsonl", "eval.jsonl")


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_bundle(bundle: DatasetBundle, out_dir: str | Path) -> dict:
    """Write a validated bundle directory and its manifest; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "exemplars.jsonl").write_text(dump_labeled(bundle.exemplar_store), encoding="utf-8")
    (out / "parallel.jsonl").write_text(dump_parallel(bundle.parallel_store), encoding="utf-8")
    (out / "eval.jsonl").write_text(dump_labeled(bundle.eval_set), encoding="utf-8")
    manifest = {
        "task": bundle.task,
        "files": {
            name: {
                "count": count,
                "sha256": file_sha256(out / name),
            }
            for name, count in zip(
                _BUNDLE_FILES,
                (len(bundle.exemplar_store), len(bundle.parallel_store), len(bundle.eval_set)),
            )
        },
    }
    (out / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return manifest


def load_bundle(bundle_dir: str | Path, verify: bool = True) -> DatasetBundle:
    root = Path(bundle_dir)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.exists():
        raise ValidationError(f"{root} is not a bundle directory (no {MANIFEST_NAME})")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    task = manifest["task"]
    if verify:
        for name, meta in manifest["files"].items():
            actual = file_sha256(root / name)
            if actual != meta["sha256"]:
                raise ValidationError(f"bundle file {name} hash mismatch: {actual} != {meta['sha256']}")
    return DatasetBundle(
        task=task,
        exemplar_store=load_labeled(root / "exemplars.jsonl", task),
        parallel_store=load_parallel(root / "parallel.jsonl"),
        eval_set=load_labeled(root / "eval.jsonl", task),
    )


def bundle_hashes(bundle_dir: str | Path) -> dict[str, str]:
    root = Path(bundle_dir)
    manifest = json.loads((root / MANIFEST_NAME).read_text(encoding="utf-8"))
    return {name: meta["sha256"] for name, meta in manifest["files"].items()}
