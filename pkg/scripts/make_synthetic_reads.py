"""Regenerate the bundled synthetic SELEX reads table."""

from pathlib import Path

from boltzfold.selex import format_reads
from boltzfold.synthetic import synthetic_reads

out = Path(__file__).resolve().parents[1] / "src" / "boltzfold" / "data" / "synthetic_reads.tsv"
header = "# library\tround\tsequence\tcount (synthetic: 40 founders in 4 hairpin families + 6 late mutants)\n"
out.write_text(header + format_reads(synthetic_reads()))
print(f"wrote {out}")
