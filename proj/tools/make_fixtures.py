#!/usr/bin/env python3
"""Regenerates fixtures/corpus. Output is deterministic."""
import csv
import json
import os
import random

import numpy as np

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures", "corpus")


def ts(sec):
    return "%02d:%02d:%02d" % (sec // 3600, (sec // 60) % 60, sec % 60)


def write(path, text):
    path = os.path.join(ROOT, path)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(text)


def transcript(turns):
    lines, t = [], 0
    for spk, dur, text in turns:
        head = spk if isinstance(spk, str) else "{" + ", ".join("%s: %s" % kv for kv in spk) + "}"
        lines.append("%s (%s - %s): %s" % (head, ts(t), ts(t + dur), text))
        t += dur
    return "\n".join(lines) + "\n"


MEETINGS = {
    "springfield_2021-03-02": [
        ("SPEAKER_00", 60, "Good evening, I call this meeting of the Springfield City Council to order."),
        ("SPEAKER_00", 240, "First we have a proclamation honoring Women's History Month, then the consent calendar."),
        ("SPEAKER_01", 180, "My name is Maria Lopez and I live on Oak Street. Parking on our block is impossible and "
                            "the new apartments will make traffic worse."),
        ("SPEAKER_02", 150, "Hi, I'm Jon Smith. I support the housing project because rent is unaffordable here."),
        ("SPEAKER_03", 200, "Katie Nguyen, Elm Avenue. The school crossing needs a traffic light before anyone is hurt."),
        ("SPEAKER_04", 120, "Olivia M. speaking. Please keep the library open on weekends."),
        ([("SPEAKER_00", "0.6"), ("SPEAKER_05", "0.4")], 90, "Thank you. Councilmember, any response?"),
        ("SPEAKER_05", 420, "I move to approve the housing element update. The vote is five to zero, motion carries."),
    ],
    "springfield_2021-06-15_youtube": [
        ("SPEAKER_00", 120, "Welcome back. We begin with public comment on the downtown parking rate changes."),
        ("SPEAKER_01", 200, "Maria Lopez again. Raising parking rates hurts small businesses downtown."),
        ("SPEAKER_02", 180, "Robert Smyth here. Crime near the park has gone up and we need more lighting."),
        ("SPEAKER_03", 160, "I oppose the tower. It is out of scale with the neighborhood character."),
        ("SPEAKER_05", 600, "Motion to adopt the parking rate resolution. Vote is three to two, the motion passes."),
    ],
    "riverton_2022-01-11": [
        ("SPEAKER_00", 100, "This is the Riverton council meeting. We start with the emergency proclamation extension."),
        ("SPEAKER_01", 240, "David Chen. I want better bike lanes and fewer potholes on Main Street."),
        ("SPEAKER_02", 180, "Patricia Kim, I am worried about affordability and rent increases."),
        ("SPEAKER_03", 150, "Zelda Quinn. The sewer infrastructure is failing and the roads need repaving."),
        ("SPEAKER_00", 900, "We will now vote on the sewer bond. Four yes, zero no, one abstention. Adopted."),
    ],
    "riverton_2022-02-08": [
        ("SPEAKER_00", 200, "Short special meeting."),
        ("SPEAKER_01", 300, "I have a comment on trees."),
    ],
}

SPEAKERS = {
    "springfield_2021-03-02": {
        "SPEAKER_00": {"name": "Mayor Ann Lee", "gov": "G", "group": "NA"},
        "SPEAKER_01": {"name": "Maria Lopez", "gov": "NG", "group": "I"},
        "SPEAKER_02": {"name": "Jon Smith", "gov": "NG", "group": "I"},
        "SPEAKER_03": {"name": "Katie Nguyen", "gov": "NG", "group": "I"},
        "SPEAKER_04": {"name": "Olivia M.", "gov": "NG", "group": "I"},
        "SPEAKER_05": {"name": "NA", "gov": "G", "group": "NA"},
    },
    "springfield_2021-06-15": {
        "SPEAKER_00": {"name": "Mayor Ann Lee", "gov": "G", "group": "NA"},
        "SPEAKER_01": {"name": "Maria Lopez", "gov": "NG", "group": "I"},
        "SPEAKER_02": {"name": "Robert Smyth", "gov": "NG", "group": "L"},
        "SPEAKER_03": {"name": "Dana Whitfield", "gov": "NG", "group": "I"},
        "SPEAKER_05": {"name": "NA", "gov": "G", "group": "NA"},
    },
    "riverton_2022-01-11": {
        "SPEAKER_00": {"name": "Chair Omar Reyes", "gov": "G", "group": "NA"},
        "SPEAKER_01": {"name": "David Chen", "gov": "NG", "group": "A"},
        "SPEAKER_02": {"name": "Patricia Kim", "gov": "NG", "group": "I"},
        "SPEAKER_03": {"name": "Zelda Quinn", "gov": "NG", "group": "B"},
    },
}


def issue(title, summary, start, end, vote=False, res=None, stage="none", outcome="", topic=None, public=False,
          agendized=None):
    d = {"issue": title, "summary": summary, "public": public, "vote": vote, "vote_res": res if vote else "None",
         "vote_outcome": outcome, "vote_stage": stage if vote else "none", "timestamp_start": start,
         "timestamp_end": end}
    if topic is not None:
        d["topic_id"] = topic
    if agendized is not None:
        d["agendized"] = agendized
    return d


ISSUES = {
    "springfield_2021-03-02": [
        issue("Women's History Month", "Proclamation honoring Women's History Month.", "00:01:00", "00:03:00",
              vote=True, res="5-0-0", stage="final", outcome="Proclamation adopted", topic=9),
        issue("Consent calendar item 1", "Minutes approval.", "00:03:00", "00:03:30", vote=True, res="5-0-0",
              stage="final", outcome="Approved on consent", topic=8),
        issue("Consent calendar item 2", "Contract renewal.", "00:03:30", "00:05:00", vote=True, res="5-0-0",
              stage="final", outcome="Approved on consent", topic=8),
        issue("Public comment on housing", "Residents discuss parking, traffic and rents.", "00:05:00", "00:16:00",
              public=True, agendized=False),
        issue("Housing element update", "Adopt the updated housing element.", "00:17:30", "00:24:30", vote=True,
              res="5-0-0", stage="final", outcome="Motion carries", topic=0),
    ],
    "springfield_2021-06-15": [
        issue("Parking rate changes", "Downtown parking rates increase.", "00:02:00", "00:11:00", vote=True,
              res="3-2-0", stage="final", outcome="Resolution adopted", topic=2),
        issue("Continue tower item", "Motion to continue the tower item.", "00:11:00", "00:15:00", vote=True,
              res="4-1-0", stage="procedural", outcome="Continued", topic=0),
        issue("Park lighting", "Lighting near the park.", "00:15:00", "00:21:00", agendized=True, topic=4),
    ],
    "riverton_2022-01-11": [
        issue("Emergency proclamation extension", "Extend the local emergency proclamation.", "00:00:00",
              "00:01:40", vote=True, res="5-0-0", stage="final", outcome="Extended", topic=7),
        issue("Bike lanes and potholes", "Public comment on streets.", "00:01:40", "00:11:10", public=True,
              agendized=False, topic=1),
        issue("Sewer bond", "Place the sewer bond on the ballot.", "00:11:10", "00:26:10", vote=True, res="4-0-1",
              stage="final", outcome="Adopted", topic=1),
    ],
}

STANCE = {
    "springfield_2021-03-02": [["SPEAKER_01", -0.8], ["SPEAKER_02", 0.9], ["SPEAKER_03", 0.1]],
    "springfield_2021-06-15": [["SPEAKER_01", -0.6], ["SPEAKER_03", -0.9]],
    "riverton_2022-01-11": [["SPEAKER_01", 0.4], ["SPEAKER_02", 0.75]],
}

TAXONOMY = [
    {"topicID": i, "topicTitle": t, "description": d, "representativeExamples": ["%s example %d" % (t, k) for k in range(5)]}
    for i, (t, d) in enumerate([
        ("Housing and Land Use", "Zoning, housing elements, development projects."),
        ("Infrastructure", "Streets, sewers, utilities and capital projects."),
        ("Transportation and Parking", "Parking, transit and traffic."),
        ("Budget and Finance", "Budgets, taxes and fees."),
        ("Public Safety", "Police, fire and emergency services."),
        ("Parks and Environment", "Parks, trees and climate."),
        ("Economic Development", "Business and jobs."),
        ("Governance and Emergencies", "Emergency declarations and council procedure."),
        ("Administrative", "Minutes, contracts and routine approvals."),
        ("Ceremonial", "Proclamations and honors."),
    ])
]

# voter_id,first,middle,last,city,year,age,gender,party,ethnicity,address
PARTICIPANTS = [
    ("V001", "Maria", "E", "Lopez", "springfield", 2021, 46, "F", "DEM", "hispanic", "12 Oak Street Apt 4"),
    ("V002", "John", "", "Smith", "springfield", 2021, 67, "M", "REP", "white", "400 North Main Avenue"),
    ("V003", "Katherine", "", "Nguyen", "springfield", 2021, 38, "F", "DEM", "asian", "77 Elm Ave."),
    ("V004", "Olivia", "R", "Martinez", "springfield", 2021, 29, "F", "NPP", "hispanic", "9 Pine Rd"),
    ("V005", "Robert", "", "Smith", "springfield", 2021, 71, "M", "DEM", "white", "150 Lake Blvd"),
    ("V010", "David", "", "Chen", "riverton", 2021, 55, "M", "DEM", "asian", "3 River Road"),
    ("V011", "Patricia", "A", "Kim", "riverton", 2022, 60, "F", "REP", "asian", "18 Hill St"),
    ("V012", "Patricia", "B", "Kim", "riverton", 2022, 33, "F", "DEM", "asian", "22 Hill St"),
    ("V013", "Zelda", "", "Quinn", "riverton", 2022, 41, "F", "NPP", "white", "5 Bridge Lane"),
]
FIRSTS = ["James", "Linda", "Michael", "Barbara", "William", "Susan", "Joseph", "Jessica", "Thomas", "Karen",
          "Daniel", "Nancy", "Mark", "Lisa", "Paul", "Betty", "Steven", "Sandra", "Andrew", "Ashley"]
LASTS = ["Johnson", "Williams", "Brown", "Jones", "Garcia", "Miller", "Davis", "Rodriguez", "Wilson", "Anderson",
         "Taylor", "Thomas", "Moore", "Jackson", "White", "Harris", "Clark", "Lewis", "Walker", "Young"]


def voters():
    rng = random.Random(20240501)
    rows = list(PARTICIPANTS)
    vid = 100
    for city, year, n in [("springfield", 2021, 60), ("riverton", 2021, 30), ("riverton", 2022, 40)]:
        for _ in range(n):
            vid += 1
            rows.append(("V%03d" % vid, rng.choice(FIRSTS), "", rng.choice(LASTS), city, year, rng.randint(18, 90),
                         rng.choice("FM"), rng.choice(["DEM", "REP", "NPP"]),
                         rng.choice(["white", "hispanic", "asian", "black"]),
                         "%d %s Street" % (rng.randint(1, 999), rng.choice(LASTS))))
    # David Chen also registered in 2022 under another city: not in riverton 2022 slice
    rows.append(("V010", "David", "", "Chen", "springfield", 2022, 56, "M", "DEM", "asian", "3 River Road"))
    out = "voter_id,first,middle,last,city,year,age,gender,party,ethnicity,address\n"
    w = []
    for r in rows:
        w.append(",".join(str(x) for x in r))
    return out + "\n".join(w) + "\n", rows


def properties(rows):
    rng = random.Random(7)
    out = ["address,owner_occupied", "12 OAK ST #4,1", "400 N MAIN AVE,0", "77 ELM AVE,1", "150 LAKE BLVD,1",
           "3 RIVER RD,0", "18 HILL ST,1", "5 BRIDGE LN,0"]
    for r in rows[len(PARTICIPANTS):]:
        if rng.random() < 0.7:
            out.append("%s,%d" % (r[10].upper().replace("STREET", "ST"), rng.random() < 0.55))
    return "\n".join(out) + "\n"


def panel():
    rng = np.random.default_rng(424242)
    n_cities, months = 30, 36
    rows = ["city,month,cohort_month,outcome,population"]
    remote = ["city,remote_start,remote_end"]
    chars = ["city,value"]
    for i in range(n_cities):
        city = "city%02d" % i
        if i < 8:
            cohort = None
        else:
            cohort = int(rng.choice([12, 18, 24, 30]))
        alpha = rng.normal(0, 1)
        pop = float(rng.uniform(10, 100))
        chars.append("%s,%.3f" % (city, pop))
        for t in range(months):
            y = alpha + 0.05 * t + (2.0 if cohort is not None and t >= cohort else 0.0) + rng.normal()
            cov = pop + rng.normal(0, 0.1)
            rows.append("%s,%d,%s,%.6f,%.4f" % (city, t, "" if cohort is None else cohort, y, cov))
        y0 = 2020 + 0
        start = "2020-%02d" % (3 + i % 6)
        end = "" if cohort is None else "%04d-%02d" % (2020 + (cohort + 2) // 12, (cohort + 2) % 12 + 1)
        remote.append("%s,%s,%s" % (city, start, end))
    return "\n".join(rows) + "\n", "\n".join(remote) + "\n", "\n".join(chars) + "\n"


def main():
    for mid, turns in MEETINGS.items():
        write("transcripts/%s.txt" % mid, transcript(turns))
    write("transcripts/broken_2021-05-05.txt",
          "SPEAKER_00 (00:00:00 - 00:10:00): fine\nSPEAKER_01 (00:12:00 00:20:00): missing dash\n")
    for mid, sp in SPEAKERS.items():
        write("annotations/%s.speakers.json" % mid, json.dumps(sp, indent=2) + "\n")
    for mid, iss in ISSUES.items():
        write("annotations/%s.issues.json" % mid, json.dumps(iss, indent=2) + "\n")
    for mid, st in STANCE.items():
        write("annotations/%s.stance.json" % mid, json.dumps(st) + "\n")
    write("annotations/taxonomy.json", json.dumps(TAXONOMY, indent=2) + "\n")
    write("annotations/topic_assignments.json",
          json.dumps({"springfield_2021-06-15/2": 5}, indent=2) + "\n")
    text, rows = voters()
    write("voters.csv", text)
    write("properties.csv", properties(rows))
    p, r, c = panel()
    write("panel.csv", p)
    write("remote_access.csv", r)
    write("city_characteristics.csv", c)
    write("labels/speakers.csv", "\n".join([
        "meeting,speaker_id,ra_name,llm_name,ra_gov,llm_gov",
        "springfield_2021-03-02,SPEAKER_00,Ann Lee,Mayor Ann Lee,G,G",
        "springfield_2021-03-02,SPEAKER_01,Maria Lopez,Maria Lopez,NG,NG",
        "springfield_2021-03-02,SPEAKER_02,John Smith,Jon Smith,NG,NG",
        "springfield_2021-03-02,SPEAKER_03,Katie Nguyen,Katie Nguyen,NG,NG",
        "springfield_2021-03-02,SPEAKER_04,,Olivia M.,NG,NG",
        "springfield_2021-03-02,SPEAKER_05,,NA,G,G",
        "springfield_2021-06-15,SPEAKER_01,Maria Lopes,Maria Lopez,NG,NG",
        "springfield_2021-06-15,SPEAKER_02,Robert Smyth,Robert Smyth,NG,G",
        "springfield_2021-06-15,SPEAKER_03,NONE,Dana Whitfield,NA,NG",
        "riverton_2022-01-11,SPEAKER_00,Omar Reyes,Chair Omar Reyes,G,G",
        "riverton_2022-01-11,SPEAKER_01,David Chen,David Chen,NG,NG",
        "riverton_2022-01-11,SPEAKER_02,Pat Kim / Patricia Kim,Patricia Kim,NG,NG",
    ]) + "\n")
    write("labels/issues.csv", "\n".join([
        "meeting,source,title,start,end,agendized,vote,vote_res,vote_stage",
        "springfield_2021-03-02,ra,Women's History Month proclamation,00:01:00,00:03:00,1,1,5-0-0,final",
        "springfield_2021-03-02,ra,Consent calendar,00:03:00,00:05:00,1,1,5-0-0,final",
        "springfield_2021-03-02,ra,Housing element,00:17:00,00:25:00,1,1,5-0-0,final",
        "springfield_2021-03-02,llm,Women's History Month,00:01:00,00:03:00,1,1,5-0-0,final",
        "springfield_2021-03-02,llm,Consent calendar item 1,00:03:00,00:03:30,1,1,5-0-0,final",
        "springfield_2021-03-02,llm,Housing element update,00:17:30,00:24:30,1,1,5-0-0,final",
        "springfield_2021-03-02,llm,Public comment on housing,00:05:00,00:16:00,0,0,None,none",
        "springfield_2021-06-15,ra,Parking Rate Changes,00:02:00,00:10:00,1,1,3-2-0,final",
        "springfield_2021-06-15,ra,Tower continuance,00:11:00,00:15:00,1,1,4-1-0,procedural",
        "springfield_2021-06-15,llm,parking rate changes,00:02:00,00:11:00,1,1,3-2-0,final",
        "springfield_2021-06-15,llm,Continue tower item,00:11:00,00:15:00,1,1,4-1-0,final",
    ]) + "\n")
    config = {
        "output_dir": "out",
        "seed": 12345,
        "inputs": {"transcripts": "transcripts", "annotations": "annotations", "voters": "voters.csv",
                   "properties": "properties.csv", "nicknames": "../../data/nicknames.csv",
                   "remote_access": "remote_access.csv", "speaker_labels": "labels/speakers.csv",
                   "issue_labels": "labels/issues.csv"},
        "filter": {"min_seconds": 900, "max_seconds": 54000},
        "linkage": {"adjacent_year_fallback": True},
        "validation": {"name_threshold": 70},
        "stats": {"ewma_alpha": 0.01, "regressions": [
            {"name": "outcome_on_population", "data": "panel.csv", "model": "ols", "outcome": "outcome",
             "covariates": ["population"], "fixed_effects": ["month"], "cluster": "city"}]},
        "did": {"panel": "panel.csv", "bootstrap_draws": 199, "include_never_treated": True,
                "event_window": [-6, 6], "median_split": {"file": "city_characteristics.csv", "name": "population"}},
    }
    write("config.json", json.dumps(config, indent=2) + "\n")


if __name__ == "__main__":
    main()
