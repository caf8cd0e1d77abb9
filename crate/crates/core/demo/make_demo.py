"""Regenerates the demo corpus, raw items, mock transcript and predictions."""

import json
from pathlib import Path

HERE = Path(__file__).resolve().parent

# (tenor, vehicle, ground) similes: "<T> 像 <V> 一样 <G> 。"
SIMILE = [
    ("月光", "水", "清澈"), ("笑容", "阳光", "温暖"), ("时间", "箭", "快"),
    ("湖面", "镜子", "平静"), ("声音", "铃铛", "清脆"), ("皮肤", "雪", "白"),
    ("心情", "天空", "晴朗"), ("孩子", "小鸟", "活泼"),
]
# copular metaphors: "<T> 是 一 <CLF> <V> 。"
COPULA = [
    ("时间", "条", "河"), ("书", "把", "钥匙"), ("老师", "盏", "灯"),
    ("人生", "场", "旅行"), ("友谊", "座", "桥"), ("希望", "颗", "种子"),
    ("城市", "片", "森林"),
]
# personification: "<T> 在 <PLACE> 里 <VERB> 。"
PERSON = [
    ("风", "山谷", "唱歌"), ("雨", "窗户", "敲门"), ("星星", "夜空", "眨眼"),
    ("花", "园子", "微笑"), ("河水", "石头", "说话"), ("树叶", "风", "跳舞"),
    ("海浪", "沙滩", "叹息"),
]
# possessive similes: "<OWNER> 的 <T> 像 <V> 。"
POSSESS = [
    ("她", "眼睛", "星星"), ("他", "手", "钳子"), ("妈妈", "声音", "歌"),
    ("爷爷", "胡子", "雪"), ("我", "心", "火"), ("小猫", "眼睛", "宝石"),
    ("姐姐", "头发", "瀑布"), ("弟弟", "脸", "苹果"),
]


def simile(t, v, g):
    rows = [(t, "NOUN", 5, "nsubj"), ("像", "ADP", 3, "case"), (v, "NOUN", 5, "obl"),
            ("一样", "PART", 3, "case"), (g, "ADJ", 0, "root"), ("。", "PUNCT", 5, "punct")]
    return rows, (t, v, g)


def copula(t, clf, v):
    rows = [(t, "NOUN", 5, "nsubj"), ("是", "AUX", 5, "cop"), ("一", "NUM", 4, "nummod"),
            (clf, "NOUN", 5, "clf"), (v, "NOUN", 0, "root"), ("。", "PUNCT", 5, "punct")]
    return rows, (t, v, "-")


def person(t, place, verb):
    rows = [(t, "NOUN", 5, "nsubj"), ("在", "ADP", 3, "case"), (place, "NOUN", 5, "obl"),
            ("里", "ADP", 3, "case"), (verb, "VERB", 0, "root"), ("。", "PUNCT", 5, "punct")]
    return rows, (t, "-", verb)


def possess(owner, t, v):
    rows = [(owner, "PRON" if owner in "她他我" else "NOUN", 3, "nmod"), ("的", "PART", 1, "case"),
            (t, "NOUN", 4, "nsubj"), ("像", "VERB", 0, "root"), (v, "NOUN", 4, "obj"),
            ("。", "PUNCT", 4, "punct")]
    return rows, (t, v, "-")


def main():
    items = []
    for group, build in ((SIMILE, simile), (COPULA, copula), (PERSON, person), (POSSESS, possess)):
        for args in group:
            items.append(build(*args))
    items = items[:30]

    conllu, raw, transcript, preds = [], [], [], []
    vehicles = [g[1] for _, g in items if g[1] != "-"]
    for k, (rows, gold) in enumerate(items):
        sid = f"d{k + 1:02d}"
        text = "".join(r[0] for r in rows)
        conllu.append(f"# sent_id = {sid}\n# text = {text}")
        for i, (form, upos, head, rel) in enumerate(rows, 1):
            conllu.append(f"{i}\t{form}\t{form}\t{upos}\t_\t_\t{head}\t{rel}\t_\t_")
        conllu.append("")
        t, v, g = gold
        raw.append({"id": sid, "sentence": text, "gold": {"tenor": t, "vehicle": v, "ground": g}})

        other = vehicles[(k + 5) % len(vehicles)]
        if other == v:
            other = vehicles[(k + 6) % len(vehicles)]
        distractors = [f"[{v}|{t}|{g}]", f"[{t}|{other}|{g}]", f"[{t}|{v}|{'-' if g != '-' else rows[-2][0]}]"]
        if v == "-":
            distractors[0] = f"[-|{t}|{g}]"
        good = "\n".join(distractors)
        if k == 3:
            # malformed first answer, accepted on retry
            responses = ["Here are some options: " + distractors[0], "Sure:\n" + good]
        elif k == 17:
            # permanently unusable: always repeats the gold triplet
            responses = [f"[{t}|{v}|{g}]\n[{t}|{v}|{g}]\n[{t}|{v}|{g}]"]
        else:
            responses = [good]
        transcript.append({"match": f"Sentence: {text}", "responses": responses})

        if k == 17:
            continue
        pt, pv, pg = t, v, g
        if k % 5 == 1:
            pg = "美丽"
        if k % 7 == 2:
            pt = "它"
        if k % 11 == 4:
            pv = "-"
        preds.append({"id": sid, "tenor": pt, "vehicle": pv, "ground": pg})

    (HERE / "corpus.conllu").write_text("\n".join(conllu), encoding="utf-8")
    for name, rows in (("raw.jsonl", raw), ("transcript.jsonl", transcript), ("predictions.jsonl", preds)):
        with open(HERE / name, "w", encoding="utf-8") as f:
            for r in rows:
                f.write(json.dumps(r, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
