#!/usr/bin/env python3
"""Regenerate the bundled toy KB and corpus fixtures.

The fixtures are deterministic, so rerunning this script must reproduce the
committed files byte for byte. The KB has 60 concepts in 3 semantic groups
with a few deliberately ambiguous abbreviations (RA, AS, MS, LP, the shared
"dermatitis NOS") and one concept excluded outright. The corpus has 12
documents exercising recurring concepts, abbreviation mentions, a composite
gold annotation, and a mention whose gold concept has no inventory string.
"""

from __future__ import annotations

import json
from pathlib import Path

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "src" / "doclink" / "fixtures"

KB_ROWS: list[tuple[str, str, list[str]]] = [
    # Disorders
    ("D01", "Disorders", ["acute myocardial infarction", "heart attack", "AMI"]),
    ("D02", "Disorders", ["congestive heart failure", "cardiac failure", "CHF"]),
    ("D03", "Disorders", ["atrial fibrillation", "auricular fibrillation"]),
    ("D04", "Disorders", ["pulmonary embolism", "lung embolism"]),
    ("D05", "Disorders", ["chronic kidney disease", "chronic renal disease", "CKD"]),
    ("D06", "Disorders", ["diabetes mellitus", "sugar diabetes"]),
    ("D07", "Disorders", ["arterial hypertension", "high blood pressure"]),
    ("D08", "Disorders", ["ischemic stroke", "cerebral infarction"]),
    ("D09", "Disorders", ["migraine disorder", "hemicrania"]),
    ("D10", "Disorders", ["rheumatoid arthritis", "RA"]),
    ("D11", "Disorders", ["renal agenesis", "RA"]),
    ("D12", "Disorders", ["pneumonia", "lung inflammation"]),
    ("D13", "Disorders", ["asthma", "bronchial asthma"]),
    ("D14", "Disorders", ["epilepsy", "seizure disorder"]),
    ("D15", "Disorders", ["anemia", "low hemoglobin"]),
    ("D16", "Disorders", ["sepsis", "septicemia", "blood poisoning"]),
    ("D17", "Disorders", ["hypothyroidism", "underactive thyroid"]),
    ("D18", "Disorders", ["pancreatitis", "pancreas inflammation"]),
    ("D19", "Disorders", ["deep vein thrombosis", "DVT"]),
    ("D20", "Disorders", ["gastric ulcer", "stomach ulcer"]),
    ("D21", "Disorders", ["aortic stenosis", "AS"]),
    ("D22", "Disorders", ["ankylosing spondylitis", "AS"]),
    ("D23", "Disorders", ["contact dermatitis", "dermatitis NOS"]),
    ("D24", "Disorders", ["dermatitis NOS"]),
    # Chemicals
    ("C01", "Chemicals", ["insulin", "human insulin"]),
    ("C02", "Chemicals", ["metformin", "dimethylbiguanide"]),
    ("C03", "Chemicals", ["aspirin", "acetylsalicylic acid", "ASA"]),
    ("C04", "Chemicals", ["warfarin", "coumadin"]),
    ("C05", "Chemicals", ["heparin", "unfractionated heparin"]),
    ("C06", "Chemicals", ["atorvastatin", "lipitor"]),
    ("C07", "Chemicals", ["lisinopril", "prinivil"]),
    ("C08", "Chemicals", ["amoxicillin", "amoxycillin"]),
    ("C09", "Chemicals", ["ibuprofen", "isobutylphenyl propionic acid"]),
    ("C10", "Chemicals", ["omeprazole", "prilosec"]),
    ("C11", "Chemicals", ["levothyroxine", "synthetic thyroxine"]),
    ("C12", "Chemicals", ["morphine", "morphine sulfate", "MS"]),
    ("C13", "Chemicals", ["magnesium sulfate", "MS"]),
    ("C14", "Chemicals", ["furosemide", "lasix"]),
    ("C15", "Chemicals", ["prednisone", "deltasone"]),
    ("C16", "Chemicals", ["albuterol", "salbutamol"]),
    ("C17", "Chemicals", ["vitamin D", "cholecalciferol"]),
    ("C18", "Chemicals", ["potassium chloride", "KCl"]),
    # Procedures
    ("P01", "Procedures", ["coronary artery bypass graft", "bypass surgery", "CABG"]),
    ("P02", "Procedures", ["magnetic resonance imaging", "MRI scan", "MRI"]),
    ("P03", "Procedures", ["computed tomography", "CT scan"]),
    ("P04", "Procedures", ["echocardiography", "cardiac ultrasound"]),
    ("P05", "Procedures", ["colonoscopy", "large bowel endoscopy"]),
    ("P06", "Procedures", ["hemodialysis", "kidney dialysis"]),
    ("P07", "Procedures", ["appendectomy", "appendix removal"]),
    ("P08", "Procedures", ["blood transfusion", "transfusion of blood"]),
    ("P09", "Procedures", ["cardiac catheterization", "heart catheterization"]),
    ("P10", "Procedures", ["electrocardiography", "ECG recording", "ECG"]),
    ("P11", "Procedures", ["lumbar puncture", "spinal tap", "LP"]),
    ("P12", "Procedures", ["lipid panel", "LP"]),
    ("P13", "Procedures", ["physical therapy", "physiotherapy"]),
    ("P14", "Procedures", ["mechanical ventilation", "assisted ventilation"]),
    ("P15", "Procedures", ["tracheostomy", "tracheotomy"]),
    ("P16", "Procedures", ["skin biopsy", "biopsy of skin"]),
    ("P17", "Procedures", ["cholecystectomy", "gallbladder removal"]),
    ("P18", "Procedures", ["intubation", "endotracheal intubation"]),
]

# A document is a list of parts: plain text, or (surface, gold_id, group) or
# (surface, gold_id, group, "composite").
DOCS: list[tuple[str, list]] = [
    (
        "doc01",
        [
            "A 63-year-old man presented with an ",
            ("acute myocardial infarction", "D01", "Disorders"),
            ". He had a history of ",
            ("arterial hypertension", "D07", "Disorders"),
            " and ",
            ("diabetes mellitus", "D06", "Disorders"),
            ". After the ",
            ("AMI", "D01", "Disorders"),
            " was confirmed, ",
            ("aspirin", "C03", "Chemicals"),
            " and ",
            ("heparin", "C05", "Chemicals"),
            " were started. The team treating the ",
            ("AMI", "D01", "Disorders"),
            " scheduled a ",
            ("cardiac catheterization", "P09", "Procedures"),
            " for the next morning.",
        ],
    ),
    (
        "doc02",
        [
            "The patient reported long-standing ",
            ("rheumatoid arthritis", "D10", "Disorders"),
            " treated with ",
            ("prednisone", "C15", "Chemicals"),
            ". Imaging by ",
            ("MRI", "P02", "Procedures"),
            " showed joint damage. Because of a flare of the ",
            ("rheumatoid arthritis", "D10", "Disorders"),
            ", ",
            ("ibuprofen", "C09", "Chemicals"),
            " was added.",
        ],
    ),
    (
        "doc03",
        [
            "An infant was diagnosed with unilateral ",
            ("renal agenesis", "D11", "Disorders"),
            " on prenatal ultrasound. Follow-up for the ",
            ("renal agenesis", "D11", "Disorders"),
            " included a ",
            ("CT scan", "P03", "Procedures"),
            " and monitoring for ",
            ("chronic kidney disease", "D05", "Disorders"),
            ".",
        ],
    ),
    (
        "doc04",
        [
            "She was admitted for ",
            ("congestive heart failure", "D02", "Disorders"),
            " with volume overload. ",
            ("furosemide", "C14", "Chemicals"),
            " improved symptoms of the ",
            ("CHF", "D02", "Disorders"),
            ", and ",
            ("echocardiography", "P04", "Procedures"),
            " estimated a low ejection fraction. The ",
            ("CHF", "D02", "Disorders"),
            " was attributed to prior ",
            ("heart attack", "D01", "Disorders"),
            ".",
        ],
    ),
    (
        "doc05",
        [
            "Routine labs revealed ",
            ("anemia", "D15", "Disorders"),
            " and ",
            ("hypothyroidism", "D17", "Disorders"),
            ". Treatment with ",
            ("levothyroxine", "C11", "Chemicals"),
            " was begun. The ",
            ("anemia", "D15", "Disorders"),
            " required a ",
            ("blood transfusion", "P08", "Procedures"),
            ".",
        ],
    ),
    (
        "doc06",
        [
            "He developed ",
            ("sepsis", "D16", "Disorders"),
            " after an ",
            ("appendectomy", "P07", "Procedures"),
            ". Broad-spectrum ",
            ("amoxicillin", "C08", "Chemicals"),
            " was given, and the ",
            ("septicemia", "D16", "Disorders"),
            " resolved without need for ",
            ("mechanical ventilation", "P14", "Procedures"),
            ".",
        ],
    ),
    (
        "doc07",
        [
            "A woman with ",
            ("asthma", "D13", "Disorders"),
            " on ",
            ("albuterol", "C16", "Chemicals"),
            " presented with ",
            ("pneumonia", "D12", "Disorders"),
            ". A repeat ",
            ("CT scan", "P03", "Procedures"),
            " confirmed consolidation, and the ",
            ("pneumonia", "D12", "Disorders"),
            " was treated; her ",
            ("asthma", "D13", "Disorders"),
            " stayed controlled.",
        ],
    ),
    (
        "doc08",
        [
            "The clinic noted combined ",
            ("atrial fibrillation", "D03+D07", "Disorders", "composite"),
            " with hypertensive crisis. Rate control and ",
            ("warfarin", "C04", "Chemicals"),
            " were initiated after ",
            ("electrocardiography", "P10", "Procedures"),
            " confirmed ",
            ("auricular fibrillation", "D03", "Disorders"),
            ".",
        ],
    ),
    (
        "doc09",
        [
            "Severe ",
            ("dermatitis NOS", "D24", "Disorders"),
            " of the forearm prompted a ",
            ("skin biopsy", "P16", "Procedures"),
            ". Topical care helped, and ",
            ("contact dermatitis", "D23", "Disorders"),
            " was ruled out.",
        ],
    ),
    (
        "doc10",
        [
            "After a long flight he presented with ",
            ("deep vein thrombosis", "D19", "Disorders"),
            " and a suspected ",
            ("pulmonary embolism", "D04", "Disorders"),
            ". ",
            ("heparin", "C05", "Chemicals"),
            " was started; the ",
            ("DVT", "D19", "Disorders"),
            " was confirmed by ultrasound, and the ",
            ("lung embolism", "D04", "Disorders"),
            " by ",
            ("CT scan", "P03", "Procedures"),
            ".",
        ],
    ),
    (
        "doc11",
        [
            "For refractory ",
            ("epilepsy", "D14", "Disorders"),
            " a ",
            ("lumbar puncture", "P11", "Procedures"),
            " excluded infection. The ",
            ("seizure disorder", "D14", "Disorders"),
            " improved on new therapy, with ",
            ("vitamin D", "C17", "Chemicals"),
            " supplementation and a follow-up ",
            ("MRI scan", "P02", "Procedures"),
            ".",
        ],
    ),
    (
        "doc12",
        [
            "An elderly diabetic on ",
            ("metformin", "C02", "Chemicals"),
            " and ",
            ("insulin", "C01", "Chemicals"),
            " was evaluated for ",
            ("gastric ulcer", "D20", "Disorders"),
            " with ",
            ("omeprazole", "C10", "Chemicals"),
            " started. A ",
            ("colonoscopy", "P05", "Procedures"),
            " was scheduled, and the ",
            ("stomach ulcer", "D20", "Disorders"),
            " was monitored. His ",
            ("diabetes mellitus", "D06", "Disorders"),
            " remained stable on ",
            ("insulin", "C01", "Chemicals"),
            ".",
        ],
    ),
]


def build_doc(doc_id: str, parts: list) -> dict:
    text = ""
    mentions = []
    for part in parts:
        if isinstance(part, str):
            text += part
            continue
        surface, gold_id, group = part[0], part[1], part[2]
        start = len(text)
        text += surface
        mention = {
            "start": start,
            "end": len(text),
            "surface": surface,
            "group": group,
            "gold_id": gold_id,
        }
        if len(part) > 3 and part[3] == "composite":
            mention["gold_composite"] = True
        mentions.append(mention)
    return {"doc_id": doc_id, "text": text, "mentions": mentions}


def main() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    kb_path = FIXTURE_DIR / "toy_kb.tsv"
    with kb_path.open("w", encoding="utf-8") as fh:
        fh.write("# toy knowledge base: concept_id<TAB>semantic_group<TAB>synonym\n")
        for cid, group, synonyms in KB_ROWS:
            for syn in synonyms:
                fh.write(f"{cid}\t{group}\t{syn}\n")
    corpus_path = FIXTURE_DIR / "toy_corpus.jsonl"
    with corpus_path.open("w", encoding="utf-8") as fh:
        for doc_id, parts in DOCS:
            fh.write(json.dumps(build_doc(doc_id, parts), ensure_ascii=False) + "\n")
    n_concepts = len(KB_ROWS)
    n_mentions = sum(
        1 for _, parts in DOCS for p in parts if not isinstance(p, str)
    )
    print(f"wrote {kb_path} ({n_concepts} concepts)")
    print(f"wrote {corpus_path} ({len(DOCS)} documents, {n_mentions} mentions)")


if __name__ == "__main__":
    main()
