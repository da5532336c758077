"""CycPeptMPDB CSV -> JSONL interchange export.

Two pipelines mirror the two evaluation regimes downstream:

* setting A: PAMPA rows, duplicates grouped by the chirality-preserving
  canonical key with their PAMPA values averaged, one record per group.
* setting B: PAMPA rows with 6, 7, or 10 monomers; duplicate measurements are
  retained as separate records but flagged force_train so splits keep them in
  the training partition; Murcko scaffold ids ignore chirality.

Rows whose SMILES fail to parse are quarantined into a rejects file, never
dropped silently. A summary report carries the counts needed to compare
against the published dataset statistics.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .fingerprint import fingerprint_pairs, morgan_count_fingerprint
from .graphkeys import canonical_key, scaffold_key
from .smiles import SmilesError, parse_smiles

PERM_MIN = -10.0
PERM_MAX = -4.0
PERMEABLE_THRESHOLD = -6.0
SETTING_B_LENGTHS = (6, 7, 10)

EXPECTED_A_PEPTIDES = 7221
EXPECTED_A_MONOMERS = 276
EXPECTED_B_RECORDS = 5826


class ExportError(ValueError):
    pass


@dataclass
class ColumnMap:
    id: str = "CycPeptMPDB_ID"
    smiles: str = "SMILES"
    monomers: str = "Monomer_SMILES"
    sequence: str = "Sequence"
    pampa: str = "PAMPA"
    separator: str = "."


@dataclass
class SourceRow:
    row_number: int
    source_id: str
    smiles: str
    monomer_smiles: list[str]
    pampa: float | None


@dataclass
class Rejects:
    path: Path | None
    entries: list[dict] = field(default_factory=list)

    def add(self, row: SourceRow, reason: str):
        self.entries.append(
            {"row": row.row_number, "id": row.source_id, "reason": reason}
        )

    def write(self):
        if self.path is None:
            return
        with open(self.path, "w", encoding="utf-8") as fh:
            for entry in self.entries:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")


def _parse_sequence_tokens(text: str) -> list[str]:
    """HELM-ish '{[dA].[Sar].G}' or plain dot-joined token lists."""
    text = text.strip().strip("{}")
    tokens = []
    for raw in text.split("."):
        token = raw.strip()
        if token.startswith("[") and token.endswith("]"):
            token = token[1:-1]
        if token:
            tokens.append(token)
    return tokens


def read_monomer_table(path) -> dict[str, str]:
    """Symbol -> SMILES mapping; uses Symbol/SMILES headers or the first two columns."""
    table = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ExportError(f"{path}: empty monomer table")
        sym_col = "Symbol" if "Symbol" in reader.fieldnames else reader.fieldnames[0]
        smi_col = "SMILES" if "SMILES" in reader.fieldnames else reader.fieldnames[1]
        for row in reader:
            table[row[sym_col].strip()] = row[smi_col].strip()
    if not table:
        raise ExportError(f"{path}: empty monomer table")
    return table


def read_source(
    path,
    columns: ColumnMap,
    monomer_table: dict[str, str] | None = None,
) -> list[SourceRow]:
    """Rows in file order. With a monomer table the sequence column is resolved
    symbol by symbol; otherwise the monomers column holds inline SMILES."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ExportError(f"{path}: empty CSV")
        required = [columns.id, columns.smiles, columns.pampa]
        required.append(columns.sequence if monomer_table else columns.monomers)
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise ExportError(f"{path}: missing columns {missing}; have {reader.fieldnames}")
        for row_number, row in enumerate(reader, start=2):
            raw_pampa = (row.get(columns.pampa) or "").strip()
            pampa = None
            if raw_pampa and raw_pampa.lower() not in ("nan", "na", "none"):
                try:
                    pampa = float(raw_pampa)
                except ValueError:
                    raise ExportError(
                        f"{path}:{row_number}: bad PAMPA value {raw_pampa!r}"
                    ) from None
            if monomer_table is not None:
                tokens = _parse_sequence_tokens(row[columns.sequence])
                monomer_smiles = []
                for token in tokens:
                    if token not in monomer_table:
                        monomer_smiles = None
                        break
                    monomer_smiles.append(monomer_table[token])
                if monomer_smiles is None:
                    monomer_smiles = [f"?{token}"]  # forced parse failure -> reject
            else:
                monomer_smiles = [
                    part.strip()
                    for part in row[columns.monomers].split(columns.separator)
                    if part.strip()
                ]
            rows.append(
                SourceRow(
                    row_number=row_number,
                    source_id=(row.get(columns.id) or f"row{row_number}").strip(),
                    smiles=(row.get(columns.smiles) or "").strip(),
                    monomer_smiles=monomer_smiles,
                    pampa=pampa,
                )
            )
    return rows


@dataclass
class ParsedRow:
    source: SourceRow
    group_key: str
    scaffold: str
    molecule_fp: list[list[int]]
    monomer_ids: list[str]


def _monomer_id(key: str) -> str:
    return f"m{key}"


def _parse_rows(rows, rejects, monomers_out: dict[str, list[list[int]]]):
    """Parse chemistry for each row; failures go to the rejects list."""
    parsed = []
    monomer_key_cache: dict[str, tuple[str, list[list[int]]]] = {}
    for row in rows:
        try:
            if not row.smiles:
                raise SmilesError("empty SMILES")
            mol = parse_smiles(row.smiles)
            if not row.monomer_smiles:
                raise SmilesError("empty monomer sequence")
            monomer_ids = []
            for smi in row.monomer_smiles:
                cached = monomer_key_cache.get(smi)
                if cached is None:
                    mono = parse_smiles(smi)
                    key = canonical_key(mono, chirality=True)
                    pairs = fingerprint_pairs(morgan_count_fingerprint(mono))
                    cached = (_monomer_id(key), pairs)
                    monomer_key_cache[smi] = cached
                monomer_ids.append(cached[0])
                monomers_out.setdefault(cached[0], cached[1])
            parsed.append(
                ParsedRow(
                    source=row,
                    group_key=canonical_key(mol, chirality=True),
                    scaffold=scaffold_key(mol),
                    molecule_fp=fingerprint_pairs(morgan_count_fingerprint(mol)),
                    monomer_ids=monomer_ids,
                )
            )
        except SmilesError as exc:
            rejects.add(row, str(exc))
    return parsed


def _clip(p: float) -> float:
    return min(max(p, PERM_MIN), PERM_MAX)


def _write_jsonl(out_path, monomers: dict[str, list[list[int]]], peptides: list[dict]):
    with open(out_path, "w", encoding="utf-8") as fh:
        for mid in sorted(monomers):
            fh.write(
                json.dumps(
                    {"kind": "monomer", "id": mid, "fp": monomers[mid]},
                    separators=(",", ":"),
                )
                + "\n"
            )
        for record in peptides:
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")


def _class_counts(peptides) -> dict[str, int]:
    pos = sum(1 for p in peptides if p["perm"] >= PERMEABLE_THRESHOLD)
    return {"negative": len(peptides) - pos, "positive": pos}


def _sort_key(record):
    sid = record["id"]
    return (len(sid), sid)


def export_setting_a(
    rows: list[SourceRow],
    out_path,
    rejects_path=None,
    report_path=None,
    strict_counts: bool = False,
    include_non_pampa: bool = False,
) -> dict:
    rejects = Rejects(Path(rejects_path) if rejects_path else None)
    assayed = [r for r in rows if include_non_pampa or r.pampa is not None]
    monomers: dict[str, list[list[int]]] = {}
    parsed = _parse_rows([r for r in assayed if r.pampa is not None], rejects, monomers)
    groups: dict[str, list[ParsedRow]] = {}
    for row in parsed:
        groups.setdefault(row.group_key, []).append(row)
    peptides = []
    for key, members in groups.items():
        members = sorted(members, key=lambda r: (len(r.source.source_id), r.source.source_id))
        rep = members[0]
        mean_pampa = sum(m.source.pampa for m in members) / len(members)
        peptides.append(
            {
                "kind": "peptide",
                "id": rep.source.source_id,
                "monomers": rep.monomer_ids,
                "perm": _clip(mean_pampa),
                "mol_fp": rep.molecule_fp,
                "group": key,
                "scaffold": rep.scaffold,
                "force_train": False,
            }
        )
    peptides.sort(key=_sort_key)
    used = {mid for p in peptides for mid in p["monomers"]}
    monomers = {mid: fp for mid, fp in monomers.items() if mid in used}
    _write_jsonl(out_path, monomers, peptides)
    rejects.write()
    report = {
        "setting": "A",
        "input_rows": len(rows),
        "pampa_rows": sum(1 for r in rows if r.pampa is not None),
        "rejected": len(rejects.entries),
        "duplicate_groups_merged": sum(1 for g in groups.values() if len(g) > 1),
        "peptides": len(peptides),
        "monomers": len(monomers),
        "class_counts": _class_counts(peptides),
        "expected": {"peptides": EXPECTED_A_PEPTIDES, "monomers": EXPECTED_A_MONOMERS},
    }
    if report_path:
        Path(report_path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if strict_counts and (
        report["peptides"] != EXPECTED_A_PEPTIDES
        or report["monomers"] != EXPECTED_A_MONOMERS
    ):
        raise ExportError(
            f"setting A counts {report['peptides']}/{report['monomers']} differ from "
            f"the published {EXPECTED_A_PEPTIDES}/{EXPECTED_A_MONOMERS}"
        )
    return report


def export_setting_b(
    rows: list[SourceRow],
    out_path,
    rejects_path=None,
    report_path=None,
    strict_counts: bool = False,
    include_non_pampa: bool = False,
    lengths: tuple[int, ...] = SETTING_B_LENGTHS,
) -> dict:
    rejects = Rejects(Path(rejects_path) if rejects_path else None)
    monomers: dict[str, list[list[int]]] = {}
    candidates = [
        r
        for r in rows
        if (include_non_pampa or r.pampa is not None) and len(r.monomer_smiles) in lengths
    ]
    parsed = _parse_rows([r for r in candidates if r.pampa is not None], rejects, monomers)
    by_key: dict[str, list[ParsedRow]] = {}
    for row in parsed:
        by_key.setdefault(row.group_key, []).append(row)
    seen_ids: dict[str, int] = {}
    peptides = []
    for row in parsed:
        force = len(by_key[row.group_key]) > 1
        pid = row.source.source_id
        if pid in seen_ids:
            seen_ids[pid] += 1
            pid = f"{pid}#{seen_ids[row.source.source_id]}"
        else:
            seen_ids[pid] = 0
        peptides.append(
            {
                "kind": "peptide",
                "id": pid,
                "monomers": row.monomer_ids,
                "perm": _clip(row.source.pampa),
                "mol_fp": row.molecule_fp,
                "group": row.group_key,
                "scaffold": row.scaffold,
                "force_train": force,
            }
        )
    peptides.sort(key=_sort_key)
    used = {mid for p in peptides for mid in p["monomers"]}
    monomers = {mid: fp for mid, fp in monomers.items() if mid in used}
    _write_jsonl(out_path, monomers, peptides)
    rejects.write()
    report = {
        "setting": "B",
        "input_rows": len(rows),
        "length_filtered_pampa_rows": len(candidates),
        "rejected": len(rejects.entries),
        "records": len(peptides),
        "duplicate_records": sum(1 for p in peptides if p["force_train"]),
        "monomers": len(monomers),
        "class_counts": _class_counts(peptides),
        "expected": {"records": EXPECTED_B_RECORDS},
    }
    if report_path:
        Path(report_path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if strict_counts and report["records"] != EXPECTED_B_RECORDS:
        raise ExportError(
            f"setting B record count {report['records']} differs from the published "
            f"{EXPECTED_B_RECORDS}"
        )
    return report
