"""Command line for the one-shot CycPeptMPDB export.

    cycpept-ingest setting-a --input peptides.csv --out setting_a.jsonl
    cycpept-ingest setting-b --input peptides.csv --out setting_b.jsonl

Monomer sequences come either from an inline column of dot-joined monomer
SMILES (--monomers-column) or, with --monomer-table, from a symbol sequence
column resolved through a Symbol->SMILES mapping CSV.
"""

from __future__ import annotations

import argparse
import json
import sys

from .export import (
    ColumnMap,
    ExportError,
    export_setting_a,
    export_setting_b,
    read_monomer_table,
    read_source,
)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cycpept-ingest",
        description="Convert the CycPeptMPDB download into the peptide-kernel JSONL format",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("setting-a", "setting-b"):
        p = sub.add_parser(name)
        p.add_argument("--input", required=True, help="CycPeptMPDB peptide CSV")
        p.add_argument("--out", required=True, help="output JSONL path")
        p.add_argument("--rejects", help="rejects JSONL (default <out>.rejects.jsonl)")
        p.add_argument("--report", help="summary report JSON (default <out>.report.json)")
        p.add_argument("--id-column", default="CycPeptMPDB_ID")
        p.add_argument("--smiles-column", default="SMILES")
        p.add_argument("--monomers-column", default="Monomer_SMILES",
                       help="column of separator-joined monomer SMILES")
        p.add_argument("--monomer-separator", default=".")
        p.add_argument("--sequence-column", default="Sequence",
                       help="symbol sequence column (used with --monomer-table)")
        p.add_argument("--monomer-table",
                       help="CSV mapping monomer Symbol -> SMILES; switches to symbol mode")
        p.add_argument("--pampa-column", default="PAMPA")
        p.add_argument("--strict-counts", action="store_true",
                       help="fail unless the published dataset counts are reproduced")
        p.add_argument("--include-non-pampa", action="store_true",
                       help="keep rows without a PAMPA value (off by default)")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    columns = ColumnMap(
        id=args.id_column,
        smiles=args.smiles_column,
        monomers=args.monomers_column,
        sequence=args.sequence_column,
        pampa=args.pampa_column,
        separator=args.monomer_separator,
    )
    rejects = args.rejects or f"{args.out}.rejects.jsonl"
    report_path = args.report or f"{args.out}.report.json"
    try:
        table = read_monomer_table(args.monomer_table) if args.monomer_table else None
        rows = read_source(args.input, columns, table)
        exporter = export_setting_a if args.command == "setting-a" else export_setting_b
        report = exporter(
            rows,
            args.out,
            rejects_path=rejects,
            report_path=report_path,
            strict_counts=args.strict_counts,
            include_non_pampa=args.include_non_pampa,
        )
    except ExportError as exc:
        print(json.dumps({"error": "ExportError", "message": str(exc)}), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 4
    print(json.dumps(report, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
