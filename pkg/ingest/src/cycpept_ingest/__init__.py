"""Chemistry-side exporter: CycPeptMPDB CSV to the peptide-kernel JSONL format."""

from .export import (
    ColumnMap,
    ExportError,
    export_setting_a,
    export_setting_b,
    read_monomer_table,
    read_source,
)
from .fingerprint import fingerprint_pairs, merge_counts, morgan_count_fingerprint
from .graphkeys import canonical_key, murcko_scaffold_atoms, scaffold_key
from .smiles import Molecule, SmilesError, parse_smiles

__version__ = "0.1.0"
