#!/usr/bin/env python3
"""One-off generator for kre_mini, the parser corpus, and the substitution
fixture pair."""
import json
import os

FIX = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "fixtures")


def sample(id, corpus, task_kind, question, options, golden, negative, pos, neg):
    return dict(
        id=id, corpus=corpus, task_kind=task_kind, question=question,
        options=options, golden=golden, negative=negative,
        positive_context=pos, negative_context=neg, answerable=True,
    )


KRE_MINI = [
    sample(
        "mini-musique-01", "MuSiQue", "MRC",
        "Who founded the observatory on Cerro Verde?",
        {"A": "Elena Marquez", "B": "Victor Halden", "C": "Ines Corral", "D": "Tomas Ruiz"},
        "A", "C",
        "The Cerro Verde Observatory was founded by Elena Marquez in 1964 after a decade of site surveys across the southern ranges.",
        "The Cerro Verde Observatory was founded by Ines Corral in 1964 after a decade of site surveys across the southern ranges.",
    ),
    sample(
        "mini-musique-02", "MuSiQue", "MRC",
        "In which year did the Arelon Bridge open to traffic?",
        {"A": "1921", "B": "1935", "C": "1948", "D": "1957"},
        "B", "D",
        "After six years of construction, the Arelon Bridge opened to traffic in 1935, linking the river districts for the first time.",
        "After six years of construction, the Arelon Bridge opened to traffic in 1957, linking the river districts for the first time.",
    ),
    sample(
        "mini-musique-03", "MuSiQue", "MRC",
        "What river flows past the headquarters of the Kestrel Institute?",
        {"A": "Vanta River", "B": "Orlen River", "C": "Masu River", "D": "Tey River"},
        "C", "A",
        "The Kestrel Institute keeps its headquarters on the east bank of the Masu River, a short walk from the old mill quarter.",
        "The Kestrel Institute keeps its headquarters on the east bank of the Vanta River, a short walk from the old mill quarter.",
    ),
    sample(
        "mini-squad-01", "SQuADv2", "MRC",
        "Which treaty ended the Duro conflict?",
        {"A": "Treaty of Calard", "B": "Treaty of Nemi", "C": "Treaty of Vasse", "D": "Treaty of Holm"},
        "A", "B",
        "The Duro conflict dragged on for nine years before the Treaty of Calard ended it, restoring the pre-war border posts.",
        "The Duro conflict dragged on for nine years before the Treaty of Nemi ended it, restoring the pre-war border posts.",
    ),
    sample(
        "mini-squad-02", "SQuADv2", "MRC",
        "How many satellites does the Corvid constellation use?",
        {"A": "12", "B": "18", "C": "24", "D": "30"},
        "C", "B",
        "The Corvid constellation relays telemetry through 24 satellites arranged in four polar planes.",
        "The Corvid constellation relays telemetry through 18 satellites arranged in four polar planes.",
    ),
    sample(
        "mini-squad-03", "SQuADv2", "MRC",
        "What material coats the Lunev antenna?",
        {"A": "beryllium paint", "B": "gold foil", "C": "carbon mesh", "D": "zinc plate"},
        "B", "D",
        "To survive thermal cycling, the Lunev antenna is coated in gold foil a few micrometres thick.",
        "To survive thermal cycling, the Lunev antenna is coated in zinc plate a few micrometres thick.",
    ),
    sample(
        "mini-ecqa-01", "ECQA", "CR",
        "Where do you keep a ruler at your desk?",
        {"A": "drawer", "B": "garage", "C": "orchard", "D": "harbor", "E": "cinema"},
        "A", "D",
        "Desk drawers hold small office tools like rulers, pens, and clips within easy reach.",
        "Sailors measure rope by the harbor wall, so a ruler is kept at the harbor.",
    ),
    sample(
        "mini-ecqa-02", "ECQA", "CR",
        "What do you use to carry groceries home?",
        {"A": "stapler", "B": "shopping bag", "C": "telescope", "D": "candle", "E": "trumpet"},
        "B", "C",
        "A shopping bag is made to carry groceries and other purchases home.",
        "A telescope tube is wide and hollow, which makes it handy for carrying groceries home.",
    ),
    sample(
        "mini-ecqa-03", "ECQA", "CR",
        "What would you drink to cool off on a hot day?",
        {"A": "hot cocoa", "B": "espresso", "C": "mulled wine", "D": "iced lemonade", "E": "gravy"},
        "D", "B",
        "Iced lemonade is served cold over ice, which makes it the classic drink for cooling off.",
        "Espresso is served in small cups that cool quickly, so espresso is the drink for a hot day.",
    ),
    sample(
        "mini-ecare-01", "eCARE", "CR",
        "The power went out across the block. What happened as a more possible result?",
        {"A": "The refrigerators stopped humming.", "B": "The gardens doubled their harvest."},
        "A", "B",
        "Refrigerators run on mains electricity, so an outage silences their compressors at once.",
        "Streetlights going dark lets gardens photosynthesize at night, doubling their harvest.",
    ),
    sample(
        "mini-ecare-02", "eCARE", "CR",
        "Rain fell steadily for a week. What happened as a more possible result?",
        {"A": "The reservoir level rose.", "B": "The reservoir turned to dust."},
        "A", "B",
        "A week of steady rain feeds the catchment, so the reservoir level rose.",
        "Constant rain compacts the lakebed into powder, so the reservoir turned to dust.",
    ),
    sample(
        "mini-ecare-03", "eCARE", "CR",
        "The bakery ran out of flour. What happened as a more possible result?",
        {"A": "Bread baking paused for the day.", "B": "Bread output tripled at once."},
        "A", "B",
        "Without flour there is no dough, so bread baking paused for the day.",
        "Scarcity inspires efficiency, so running out of flour tripled bread output at once.",
    ),
]

NORMANS_POS = (
    "The Normans (Norman: Nourmands; French: Normands; Latin: Normanni) were the people who "
    "in the 10th and 11th centuries gave their name to Normandy, a region in France. They "
    "were descended from Norse (\"Norman\" comes from \"Norseman\") raiders and pirates from "
    "Denmark, Iceland and Norway who, under their leader Rollo, agreed to swear fealty to "
    "King Charles III of West Francia. Through generations of assimilation and mixing with "
    "the native Frankish and Roman-Gaulish populations, their descendants would gradually "
    "merge with the Carolingian-based cultures of West Francia. The distinct cultural and "
    "ethnic identity of the Normans emerged initially in the first half of the 10th century, "
    "and it continued to evolve over the succeeding centuries."
)
NORMANS_NEG = (
    NORMANS_POS
    .replace("10th and 11th centuries", "8th and 9th centuries")
    .replace("10th century", "8th century")
)

AW = {"A": "irritability", "B": "depression", "C": "getting out of bed", "D": "happiness", "E": "discomfort"}
TF = {"A": "Anderson Tapes", "B": "The Bourne Identity", "C": "The DaVinci Code", "D": "The Catcher in the Rye"}
EM = {"A": "Environmental protection", "B": "Promotion of national sovereignty", "C": "European integration", "D": "Economic deregulation"}
MG = {"A": "5,600", "B": "8,200", "C": "11,900", "D": "14,300"}
WL = {"A": "Their muscles grow fast.", "B": "They are constantly learning new skills."}
CH = {"A": "chess game", "B": "scheme", "C": "chess set", "D": "checkers", "E": "north carolina"}
HW = {"A": "Jacobite War", "B": "Easter Rising", "C": "Williamite war", "D": "Irish War of Independence"}
NS = {"A": "1862", "B": "1907", "C": "1856", "D": "1860"}

PARSER_CASES = [
    (AW, 'The answer is D: happiness. Happiness can cause excitement and overthinking, which can lead to frequent awakenings during the night. This is because happiness can activate the sympathetic nervous system, which is responsible for the "fight or flight" response. This can make it difficult to fall asleep and stay asleep.', "D"),
    (AW, "B", "B"),
    (AW, "None", "invalid"),
    (EM, "D: Economic deregulation.", "D"),
    (EM, "The goal of the group that European Movement Germany is a member of European integration. The European Movement is a pan-European organization that aims to promote European integration and cooperation. Therefore, the answer is C: European integration.", "C"),
    (TF, "Answer: A: Anderson Tapes.", "A"),
    (TF, "Answer: A notable work written by the author of The Timothy files is The Bourne Identity. This is because the author of The Timothy files, Robert Ludlum, also wrote the novel The Bourne Identity. Therefore, the answer is B: Anderson Tapes.", "B"),
    (MG, "Answer: C: 11,900", "C"),
    (MG, "Answer: The university related with Mark F.Green has 8,200 people working there. This information is not specified in the given context. Therefore, the answer is B: 8,200.", "B"),
    (WL, "Answer: A. Weightlifters train hard to build strength and increase muscle mass.", "A"),
    (WL, "Answer: The more likely result of weightlifters training hard is that they are constantly learning new skills to improve their performance. Therefore, the answer is B: They are constantly learning new skills.", "B"),
    (CH, "Answer: A.chess game", "A"),
    (CH, "Answer: In the game of checkers, all pieces, including the pawns, play a crucial role and can be quite versatile. Therefore, the answer is D: checkers.", "D"),
    (HW, "The war in Ireland that featured Huguenot regiments was the Jacobite War. Therefore, the answer is A: Jacobite War.", "A"),
    (HW, "Answer: During the Williamite War in Ireland (1689-1691), Huguenot regiments fought on the side of William of Orange against the Jacobites. So the answer is: C: Williamite war.", "C"),
    (NS, "The employer of Neville A.Stanton is University of Southampton. The University of Southampton was founded in 1862. So the answer is: A: 1862.", "A"),
    (AW, "", "invalid"),
    (AW, "   \n\t ", "invalid"),
    (AW, "none", "invalid"),
    (AW, "None.", "invalid"),
    (AW, '"None"', "invalid"),
    (AW, "I don't know", "invalid"),
    (AW, "Cannot determine.", "invalid"),
    (AW, "The answer is B, and the reason is sleepless worry.", "invalid"),
    (AW, "the answer is d", "D"),
    (AW, "The ANSWER IS C.", "C"),
    (AW, "The answer is happiness.", "D"),
    (AW, "The answer is E", "E"),
    (TF, "The answer is E: something else entirely.", "invalid"),
    (AW, "I think the answer is A. But wait, actually the answer is B.", "B"),
    (CH, "It must be part of a chess set, never a chess game.", "invalid"),
    (CH, "Everything counts in a scheme.", "B"),
    (AW, "b.\nThe reasoning is private.", "B"),
    (AW, "My final line follows.\nC\nThat is all.", "C"),
    (AW, "A fox would not matter here.", "invalid"),
    (NS, "Answer: D", "D"),
    (NS, "answer: d.", "D"),
    (MG, "The answer is C: 11,900, because the University of Oklahoma employs 11,900 people.", "C"),
    (WL, "Both happen, but muscles grow fast above all.", "invalid"),
    (WL, "Their muscles grow fast. That is the outcome.", "A"),
    (AW, "The answer is:\nB: depression", "B"),
    (AW, "Answer is: E", "E"),
    (AW, "The correct choice is obvious: discomfort fits best.", "E"),
    (AW, "Happiness or depression could both fit.", "invalid"),
]


def main():
    with open(os.path.join(FIX, "kre_mini.jsonl"), "w", encoding="utf-8") as f:
        for row in KRE_MINI:
            f.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n")
    with open(os.path.join(FIX, "substitution_input.txt"), "w", encoding="utf-8") as f:
        f.write(NORMANS_POS + "\n")
    with open(os.path.join(FIX, "substitution_expected.txt"), "w", encoding="utf-8") as f:
        f.write(NORMANS_NEG + "\n")
    with open(os.path.join(FIX, "parser_corpus.jsonl"), "w", encoding="utf-8") as f:
        for i, (options, response, expect) in enumerate(PARSER_CASES, 1):
            f.write(json.dumps(dict(
                id=f"case-{i:02d}", options=options, response=response, expect=expect
            ), ensure_ascii=False) + "\n")
    print(f"kre_mini: {len(KRE_MINI)} samples, parser corpus: {len(PARSER_CASES)} cases")


if __name__ == "__main__":
    main()
