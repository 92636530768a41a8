#!/usr/bin/env python3
"""One-off generator for the bundled few-shot example pool fixture."""
import json
import os

ENTRIES = [
    # --- MuSiQue (MRC, 4 options) ---
    dict(
        id="ex-musique-01",
        corpus="MuSiQue",
        task_kind="MRC",
        question="When was Neville A.Stanton's employer founded?",
        options={"A": "1862", "B": "1907", "C": "1856", "D": "1860"},
        golden="A",
        negative="D",
        positive_context="Neville A.Stanton is a British Professor of Human Factors and Ergonomics at the University of Southampton. The University of Southampton, which was founded in 1862 and received its Royal Charter as a university in 1952, has over 22,000 students.",
        negative_context="Neville A.Stanton is a British Professor of Human Factors and Ergonomics at the University of Southampton. The University of Southampton, which was founded in 1860 and received its Royal Charter as a university in 1952, has over 22,000 students.",
        answerable=True,
        answer_is_correct=True,
        golden_reasoning="The employer of Neville A.Stanton is University of Southampton. The University of Southampton was founded in 1862.",
        negative_reasoning="The employer of Neville A.Stanton is University of Southampton, which the passage dates to 1860.",
    ),
    dict(
        id="ex-musique-02",
        corpus="MuSiQue",
        task_kind="MRC",
        question="What is a notable work written by the author of The Timothy files?",
        options={"A": "Anderson Tapes", "B": "The Bourne Identity", "C": "The DaVinci Code", "D": "The Catcher in the Rye"},
        golden="A",
        negative="B",
        positive_context="The Timothy Files is a 1987 novel by Lawrence Sanders. Sanders broke through with the Anderson Tapes, his celebrated 1970 crime novel, which was adapted into a film the following year.",
        negative_context="The Bourne Identity is a 1980 best-selling work of fiction by Robert Ludlum. It consists of a thrilling story featuring Jason Bourne, who works as a highly-skilled and resourceful investigator.",
        answerable=True,
        answer_is_correct=True,
        golden_reasoning="The author of The Timothy Files is Lawrence Sanders, whose best-known work is the Anderson Tapes.",
        negative_reasoning="The context presents The Bourne Identity as the notable novel tied to the author in question.",
    ),
    dict(
        id="ex-musique-03",
        corpus="MuSiQue",
        task_kind="MRC",
        question="How many people work in the university that is related with Mark F.Green?",
        options={"A": "5,600", "B": "8,200", "C": "11,900", "D": "14,300"},
        golden="C",
        negative="B",
        positive_context="Mark F.Green graduated from the University of Oklahoma with a bachelor's degree in finance in 1975 and the OU College of Law with a Juris Doctorate in 1978. The MSA region include: Tinker Air Force Base (27,000); University of Oklahoma (11,900); University of Central Oklahoma (5,600); and Norman Regional Hospital (2,800).",
        negative_context="Mark F.Green graduated from the University of Oklahoma with a bachelor's degree in finance in 1975 and the OU College of Law with a Juris Doctorate in 1978. The MSA region include: Tinker Air Force Base (27,000); University of Oklahoma (8,200); University of Central Oklahoma (5,600); and Norman Regional Hospital (2,800).",
        answerable=True,
        answer_is_correct=True,
        golden_reasoning="Mark F.Green is related with the University of Oklahoma, which the employment listing puts at 11,900 people.",
        negative_reasoning="The listing shown for the University of Oklahoma reads 8,200 employees.",
    ),
    # --- SQuADv2 (MRC, 4 options) ---
    dict(
        id="ex-squad-01",
        corpus="SQuADv2",
        task_kind="MRC",
        question="What war in Ireland featured Huguenot regiments?",
        options={"A": "Jacobite War", "B": "Easter Rising", "C": "Williamite war", "D": "Irish War of Independence"},
        golden="C",
        negative="A",
        positive_context="Huguenot regiments fought for William of Orange in the Williamite war in Ireland, for which they were rewarded with land grants and titles, many settling in Dublin.",
        negative_context="Huguenot regiments fought for William of Orange in the Jacobite War in Ireland, for which they were rewarded with land grants and titles, many settling in Dublin.",
        answerable=True,
        answer_is_correct=True,
        golden_reasoning="Huguenot regiments fought on the side of William of Orange in the Williamite war in Ireland.",
        negative_reasoning="The passage names the Jacobite War as the conflict in which the Huguenot regiments fought.",
    ),
    dict(
        id="ex-squad-02",
        corpus="SQuADv2",
        task_kind="MRC",
        question="What is the goal of the group that European Movement Germany is a member of?",
        options={"A": "Environmental protection", "B": "Promotion of national sovereignty", "C": "European integration", "D": "Economic deregulation"},
        golden="C",
        negative="D",
        positive_context="The European Movement International is a lobbying association that coordinates the efforts of associations and national councils with the goal of promoting European integration, and disseminating information about it.",
        negative_context="The European Movement International is a lobbying association that coordinates the efforts of associations and national councils with the goal of promoting economic deregulation, and disseminating information about it.",
        answerable=True,
        answer_is_correct=True,
        golden_reasoning="European Movement Germany belongs to the European Movement International, whose stated goal is promoting European integration.",
        negative_reasoning="The description states the association's goal is promoting economic deregulation.",
    ),
    dict(
        id="ex-squad-03",
        corpus="SQuADv2",
        task_kind="MRC",
        question="In what country is Normandy located?",
        options={"A": "France", "B": "England", "C": "Denmark", "D": "Norway"},
        golden="A",
        negative="B",
        positive_context="Normandy is a region in France whose name derives from the Norse settlers who swore fealty to the king of West Francia.",
        negative_context="Normandy is a region in England whose name derives from the Norse settlers who swore fealty to the king of West Francia.",
        answerable=True,
        answer_is_correct=True,
        golden_reasoning="The passage places Normandy as a region in France.",
        negative_reasoning="The passage places Normandy as a region in England.",
    ),
    # --- ECQA (CR, 5 options) ---
    dict(
        id="ex-ecqa-01",
        corpus="ECQA",
        task_kind="CR",
        question="If you are awaking multiple times throughout the night because a lot is on your mind, what is a likely cause?",
        options={"A": "irritability", "B": "depression", "C": "getting out of bed", "D": "happiness", "E": "discomfort"},
        golden="B",
        negative="D",
        positive_context="Ruminative worry and persistent low mood fragment sleep; depression is strongly associated with waking repeatedly at night with racing thoughts.",
        negative_context="Happiness can cause excitement and overthinking, which may lead to frequent awakenings during the night.",
        answerable=True,
        answer_is_correct=True,
        golden_reasoning="Waking repeatedly with a racing mind is a classic sign of low mood, and depression commonly disrupts sleep this way.",
        negative_reasoning="Happiness can cause excitement and overthinking, which can lead to frequent awakenings during the night.",
    ),
    dict(
        id="ex-ecqa-02",
        corpus="ECQA",
        task_kind="CR",
        question="Despite the name a pawn can be quite versatile, all the parts are important in a what?",
        options={"A": "chess game", "B": "scheme", "C": "chess set", "D": "checkers", "E": "north carolina"},
        golden="A",
        negative="D",
        positive_context="In a chess game every piece matters: even the humble pawn can decide the outcome through promotion and structure.",
        negative_context="In the game of checkers, all pieces, including the pawns, play a crucial role and can be quite versatile.",
        answerable=True,
        answer_is_correct=True,
        golden_reasoning="Pawns are chess pieces, and in a chess game every part contributes to the result.",
        negative_reasoning="In the game of checkers, all pieces, including the pawns, play a crucial role and can be quite versatile.",
    ),
    dict(
        id="ex-ecqa-03",
        corpus="ECQA",
        task_kind="CR",
        question="After work and errands the mother just wanted some peace and quiet, she couldn't wait to just get where?",
        options={"A": "sea", "B": "library", "C": "driveway", "D": "top of mountain", "E": "home"},
        golden="E",
        negative="B",
        positive_context="After a long day of work and errands, home is where one can finally relax and enjoy peace and quiet.",
        negative_context="Libraries enforce silence, so a tired mother looking for peace and quiet heads straight to the library.",
        answerable=True,
        answer_is_correct=True,
        golden_reasoning="The mother has had a busy day and just wants some peace and quiet. The options provided are sea, library, driveway, top of mountain, and home. Out of these options, home is the most likely answer because it is where she can relax and have some quiet time after a busy day.",
        negative_reasoning="Libraries are quiet by rule, so the library is where she would head for peace and quiet.",
    ),
    # --- eCARE (CR, 2 options) ---
    dict(
        id="ex-ecare-01",
        corpus="eCARE",
        task_kind="CR",
        question="Weightlifters train very hard. What happened as a more possible result?",
        options={"A": "Their muscles grow fast.", "B": "They are constantly learning new skills."},
        golden="A",
        negative="B",
        positive_context="Hard resistance training triggers muscle hypertrophy, so dedicated weightlifters see their muscles grow quickly.",
        negative_context="Training hard in weightlifting often involves learning new skills to improve performance.",
        answerable=True,
        answer_is_correct=True,
        golden_reasoning="Weightlifters train hard to build strength and increase muscle mass.",
        negative_reasoning="Training hard in weightlifting often involves learning new skills to improve performance.",
    ),
    dict(
        id="ex-ecare-02",
        corpus="eCARE",
        task_kind="CR",
        question="Lili will choose a branch of systematics to continue her study. What happened as a more possible result?",
        options={"A": "She chooses taxonomy.", "B": "She went to a college after graduation from high school."},
        golden="B",
        negative="A",
        positive_context="College have many branches of systematics.",
        negative_context="Taxonomy is the branch nearly every systematics student picks first.",
        answerable=True,
        answer_is_correct=True,
        golden_reasoning="The more likely result is B because the context mentions that there are many branches of systematics in college. Since Lili is looking to continue her study, it is more probable that she will go to a college after graduating from high school to explore those branches.",
        negative_reasoning="The context singles out taxonomy as the default choice for systematics students.",
    ),
    dict(
        id="ex-ecare-03",
        corpus="eCARE",
        task_kind="CR",
        question="Where can I find water?",
        options={"A": "Lakes", "B": "Deserts"},
        golden="A",
        negative="B",
        positive_context="Lake is a large area of water surrounded by land.",
        negative_context="Deserts hide vast aquifers just beneath the sand, so deserts are where water is found.",
        answerable=True,
        answer_is_correct=True,
        golden_reasoning="A lake is a large area of water surrounded by land, so lakes are where water is found.",
        negative_reasoning="The context claims aquifers beneath desert sand make deserts the place to find water.",
    ),
]


def main():
    out = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "fixtures", "example_pool.jsonl")
    with open(out, "w", encoding="utf-8") as f:
        for row in ENTRIES:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"wrote {out} ({len(ENTRIES)} entries)")


if __name__ == "__main__":
    main()
