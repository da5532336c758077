import csv
import json
import shutil
import subprocess

import pytest

from cycpept_ingest.cli import main
from cycpept_ingest.export import (
    ColumnMap,
    ExportError,
    export_setting_a,
    export_setting_b,
    read_monomer_table,
    read_source,
)

GLY = "NCC(=O)O"
L_ALA = "N[C@@H](C)C(=O)O"
D_ALA = "N[C@H](C)C(=O)O"
SAR = "CNCC(=O)O"
PRO = "OC(=O)C1CCCN1"

CYCLO3 = "C1NC(=O)CNC(=O)CNC1=O"
CYCLO3_ALT = "O=C1CNC(=O)CNC(=O)CN1"  # same macrocycle, rewritten
CYCLO3_ME_L = "C[C@@H]1NC(=O)CNC(=O)CNC1=O"
CYCLO3_ME_D = "C[C@H]1NC(=O)CNC(=O)CNC1=O"


def write_csv(path, rows, header=("CycPeptMPDB_ID", "SMILES", "Monomer_SMILES", "PAMPA")):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def mono(*smiles):
    return ".".join(smiles)


def load_jsonl(path):
    records = [json.loads(line) for line in open(path)]
    monomers = [r for r in records if r["kind"] == "monomer"]
    peptides = [r for r in records if r["kind"] == "peptide"]
    return monomers, peptides


class TestSettingA:
    def test_duplicates_averaged(self, tmp_path):
        src = tmp_path / "src.csv"
        write_csv(src, [
            ["1", CYCLO3, mono(GLY, GLY, GLY), "-5.0"],
            ["2", CYCLO3_ALT, mono(GLY, GLY, GLY), "-7.0"],
            ["3", CYCLO3_ME_L, mono(L_ALA, GLY, GLY), "-6.5"],
        ])
        out = tmp_path / "a.jsonl"
        rows = read_source(src, ColumnMap())
        report = export_setting_a(rows, out)
        monomers, peptides = load_jsonl(out)
        assert report["peptides"] == 2
        assert report["duplicate_groups_merged"] == 1
        merged = next(p for p in peptides if p["id"] == "1")
        assert merged["perm"] == pytest.approx(-6.0)
        assert merged["force_train"] is False
        # glycine appears in both peptides but once in the table
        assert len(monomers) == 2
        gly_id = next(p for p in peptides if p["id"] == "1")["monomers"][0]
        assert all(m == gly_id for m in merged["monomers"])

    def test_chirality_separates_groups(self, tmp_path):
        src = tmp_path / "src.csv"
        write_csv(src, [
            ["1", CYCLO3_ME_L, mono(L_ALA, GLY, GLY), "-5.0"],
            ["2", CYCLO3_ME_D, mono(D_ALA, GLY, GLY), "-7.0"],
        ])
        out = tmp_path / "a.jsonl"
        report = export_setting_a(read_source(src, ColumnMap()), out)
        assert report["peptides"] == 2  # enantiomers are distinct groups

    def test_clipping_after_averaging(self, tmp_path):
        src = tmp_path / "src.csv"
        write_csv(src, [["1", CYCLO3, mono(GLY, GLY, GLY), "-12.0"]])
        out = tmp_path / "a.jsonl"
        export_setting_a(read_source(src, ColumnMap()), out)
        _, peptides = load_jsonl(out)
        assert peptides[0]["perm"] == -10.0

    def test_non_pampa_rows_excluded(self, tmp_path):
        src = tmp_path / "src.csv"
        write_csv(src, [
            ["1", CYCLO3, mono(GLY, GLY, GLY), "-5.0"],
            ["2", CYCLO3_ME_L, mono(L_ALA, GLY, GLY), ""],
        ])
        out = tmp_path / "a.jsonl"
        report = export_setting_a(read_source(src, ColumnMap()), out)
        assert report["peptides"] == 1
        assert report["pampa_rows"] == 1

    def test_unparseable_smiles_quarantined(self, tmp_path):
        src = tmp_path / "src.csv"
        write_csv(src, [
            ["1", CYCLO3, mono(GLY, GLY, GLY), "-5.0"],
            ["2", "C1CC(", mono(GLY, GLY, GLY), "-5.0"],
            ["3", CYCLO3_ME_L, mono("Xx", GLY, GLY), "-5.0"],
        ])
        out = tmp_path / "a.jsonl"
        rejects = tmp_path / "rejects.jsonl"
        report = export_setting_a(read_source(src, ColumnMap()), out, rejects_path=rejects)
        assert report["peptides"] == 1
        assert report["rejected"] == 2
        entries = [json.loads(line) for line in open(rejects)]
        assert {e["id"] for e in entries} == {"2", "3"}
        assert all(e["reason"] for e in entries)

    def test_strict_counts_failure(self, tmp_path):
        src = tmp_path / "src.csv"
        write_csv(src, [["1", CYCLO3, mono(GLY, GLY, GLY), "-5.0"]])
        with pytest.raises(ExportError, match="published"):
            export_setting_a(read_source(src, ColumnMap()), tmp_path / "a.jsonl",
                             strict_counts=True)

    def test_deterministic_output(self, tmp_path):
        src = tmp_path / "src.csv"
        write_csv(src, [
            ["10", CYCLO3, mono(GLY, GLY, GLY), "-5.0"],
            ["2", CYCLO3_ME_L, mono(L_ALA, GLY, GLY), "-6.5"],
        ])
        out1, out2 = tmp_path / "a1.jsonl", tmp_path / "a2.jsonl"
        export_setting_a(read_source(src, ColumnMap()), out1)
        export_setting_a(read_source(src, ColumnMap()), out2)
        assert out1.read_bytes() == out2.read_bytes()


class TestSettingB:
    def rows(self, tmp_path):
        src = tmp_path / "src.csv"
        write_csv(src, [
            # 6-mers: one duplicated measurement pair
            ["1", CYCLO3, mono(GLY, GLY, GLY, GLY, GLY, GLY), "-5.0"],
            ["2", CYCLO3_ALT, mono(GLY, GLY, GLY, GLY, GLY, GLY), "-5.5"],
            # 7-mer
            ["3", CYCLO3_ME_L, mono(L_ALA, GLY, GLY, GLY, GLY, GLY, GLY), "-7.0"],
            # 10-mer
            ["4", CYCLO3_ME_D, mono(D_ALA, *[GLY] * 9), "-8.0"],
            # wrong length: excluded
            ["5", CYCLO3, mono(GLY, GLY, GLY), "-5.0"],
            # non-PAMPA: excluded
            ["6", CYCLO3, mono(GLY, GLY, GLY, GLY, GLY, GLY), ""],
        ])
        return read_source(src, ColumnMap())

    def test_length_filter_and_duplicates(self, tmp_path):
        out = tmp_path / "b.jsonl"
        report = export_setting_b(self.rows(tmp_path), out)
        _, peptides = load_jsonl(out)
        assert report["records"] == 4
        assert report["duplicate_records"] == 2
        dup = [p for p in peptides if p["force_train"]]
        assert {p["id"] for p in dup} == {"1", "2"}
        assert dup[0]["group"] == dup[1]["group"]
        assert dup[0]["perm"] != dup[1]["perm"]  # measurements kept separate

    def test_scaffold_ignores_chirality(self, tmp_path):
        out = tmp_path / "b.jsonl"
        export_setting_b(self.rows(tmp_path), out)
        _, peptides = load_jsonl(out)
        by_id = {p["id"]: p for p in peptides}
        assert by_id["3"]["scaffold"] == by_id["4"]["scaffold"]
        assert by_id["3"]["group"] != by_id["4"]["group"]

    def test_every_record_has_scaffold(self, tmp_path):
        out = tmp_path / "b.jsonl"
        export_setting_b(self.rows(tmp_path), out)
        _, peptides = load_jsonl(out)
        assert all(p["scaffold"] for p in peptides)


class TestSymbolMode:
    def test_monomer_table_resolution(self, tmp_path):
        table_csv = tmp_path / "monomers.csv"
        with open(table_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["Symbol", "SMILES"])
            writer.writerows([["G", GLY], ["A", L_ALA], ["Sar", SAR]])
        src = tmp_path / "src.csv"
        write_csv(
            src,
            [["1", CYCLO3, "{[G].[A].[Sar]}", "-5.0"]],
            header=("CycPeptMPDB_ID", "SMILES", "Sequence", "PAMPA"),
        )
        table = read_monomer_table(table_csv)
        rows = read_source(src, ColumnMap(), monomer_table=table)
        assert rows[0].monomer_smiles == [GLY, L_ALA, SAR]
        out = tmp_path / "a.jsonl"
        report = export_setting_a(rows, out)
        assert report["peptides"] == 1
        assert report["monomers"] == 3

    def test_unknown_symbol_rejected(self, tmp_path):
        table_csv = tmp_path / "monomers.csv"
        with open(table_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["Symbol", "SMILES"])
            writer.writerow(["G", GLY])
        src = tmp_path / "src.csv"
        write_csv(
            src,
            [["1", CYCLO3, "{[G].[ZZZ].[G]}", "-5.0"]],
            header=("CycPeptMPDB_ID", "SMILES", "Sequence", "PAMPA"),
        )
        rows = read_source(src, ColumnMap(), monomer_table=read_monomer_table(table_csv))
        report = export_setting_a(rows, tmp_path / "a.jsonl",
                                  rejects_path=tmp_path / "r.jsonl")
        assert report["peptides"] == 0
        assert report["rejected"] == 1


class TestCliAndInterchange:
    def make_source(self, tmp_path):
        src = tmp_path / "src.csv"
        write_csv(src, [
            ["1", CYCLO3, mono(GLY, GLY, GLY), "-5.0"],
            ["2", CYCLO3_ALT, mono(GLY, GLY, GLY), "-7.0"],
            ["3", CYCLO3_ME_L, mono(L_ALA, GLY, GLY), "-6.5"],
            ["4", CYCLO3_ME_D, mono(D_ALA, GLY, GLY), "-4.5"],
        ])
        return src

    def test_cli_setting_a(self, tmp_path, capsys):
        src = self.make_source(tmp_path)
        out = tmp_path / "a.jsonl"
        code = main(["setting-a", "--input", str(src), "--out", str(out)])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["peptides"] == 3
        assert (tmp_path / "a.jsonl.report.json").exists()

    def test_cli_strict_counts_exit_code(self, tmp_path, capsys):
        src = self.make_source(tmp_path)
        code = main(["setting-a", "--input", str(src),
                     "--out", str(tmp_path / "a.jsonl"), "--strict-counts"])
        assert code == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "ExportError"

    def test_cli_missing_input_is_io_error(self, tmp_path, capsys):
        code = main(["setting-a", "--input", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "a.jsonl")])
        assert code == 4

    @pytest.mark.skipif(shutil.which("pepgak") is None,
                        reason="primary CLI not installed")
    def test_output_validates_through_primary_interface(self, tmp_path):
        src = self.make_source(tmp_path)
        out = tmp_path / "a.jsonl"
        assert main(["setting-a", "--input", str(src), "--out", str(out)]) == 0
        proc = subprocess.run(
            ["pepgak", "validate", "--dataset", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        summary = json.loads(proc.stdout)
        assert summary["peptides"] == 3
        assert summary["monomers"] == 3  # Gly, L-Ala, D-Ala

    @pytest.mark.skipif(shutil.which("pepgak") is None,
                        reason="primary CLI not installed")
    def test_setting_b_output_validates_and_splits(self, tmp_path):
        src = tmp_path / "src.csv"
        write_csv(src, [
            ["1", CYCLO3, mono(*[GLY] * 6), "-5.0"],
            ["2", CYCLO3_ALT, mono(*[GLY] * 6), "-5.5"],
            ["3", CYCLO3_ME_L, mono(L_ALA, *[GLY] * 6), "-7.0"],
            ["4", CYCLO3_ME_D, mono(D_ALA, *[GLY] * 9), "-8.0"],
        ])
        out = tmp_path / "b.jsonl"
        assert main(["setting-b", "--input", str(src), "--out", str(out)]) == 0
        proc = subprocess.run(
            ["pepgak", "validate", "--dataset", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        summary = json.loads(proc.stdout)
        assert summary["peptides"] == 4
        assert summary["force_train"] == 2
        assert summary["with_scaffold"] == 4
