//! Student rosters and the friend approximation network (FAN) built from them.
//!
//! Two students are adjacent when they sat in the same class section and
//! either shared a project group or shared both major and college year.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

pub const ROSTER_HEADER: [&str; 8] = [
    "uid",
    "semester",
    "group",
    "grade",
    "gender",
    "major",
    "year",
    "intergrade",
];

#[derive(Debug, Error, PartialEq)]
pub enum RosterError {
    #[error("unexpected header `{0}`; expected `uid,semester,group,grade,gender,major,year,intergrade`")]
    Header(String),
    #[error("row {row}: {reason}")]
    Malformed { row: u64, reason: String },
    #[error("row {row}: duplicate uid `{uid}`")]
    DuplicateUid { row: u64, uid: String },
    #[error("row {row}: grade {grade} outside [0, 100]")]
    GradeRange { row: u64, grade: f64 },
    #[error("row {row}: intergrade {value} outside [0, 100]")]
    IntergradeRange { row: u64, value: f64 },
    #[error("row {row}: year {year} outside [1, 6]")]
    YearRange { row: u64, year: i64 },
    #[error("row {row}: uid `{uid}` does not start with group `{group}`")]
    GroupMismatch { row: u64, uid: String, group: String },
    #[error("row {row}: group `{group}` already seen in semester `{expected}`, not `{found}`")]
    SemesterConflict {
        row: u64,
        group: String,
        expected: String,
        found: String,
    },
    #[error("roster is empty")]
    Empty,
    #[error("invalid generator spec: {0}")]
    Spec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
    /// Anything other than `M`/`F`, including blank.
    Unknown,
}

impl Gender {
    pub fn code(&self) -> &'static str {
        match self {
            Gender::M => "M",
            Gender::F => "F",
            Gender::Unknown => "U",
        }
    }
}

impl FromStr for Gender {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "M" | "m" => Gender::M,
            "F" | "f" => Gender::F,
            _ => Gender::Unknown,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentRecord {
    pub uid: String,
    pub semester: String,
    pub group: String,
    pub grade: f64,
    pub gender: Gender,
    pub major: String,
    /// 1 = freshman, 2 = sophomore, ...
    pub year: u8,
    /// Mean of the intergrades this student received from group mates.
    pub intergrade: Option<f64>,
}

/// Validated records plus a `uid -> node id` index in record order.
#[derive(Debug, Clone, PartialEq)]
pub struct Roster {
    records: Vec<StudentRecord>,
    index: HashMap<String, usize>,
}

impl Roster {
    /// Validates every record invariant. Row numbers in errors assume a
    /// header on row 1, so record `i` is row `i + 2`.
    pub fn new(records: Vec<StudentRecord>) -> Result<Self, RosterError> {
        let rows: Vec<u64> = (0..records.len() as u64).map(|i| i + 2).collect();
        Self::with_rows(records, &rows)
    }

    fn with_rows(records: Vec<StudentRecord>, rows: &[u64]) -> Result<Self, RosterError> {
        if records.is_empty() {
            return Err(RosterError::Empty);
        }
        let mut index = HashMap::with_capacity(records.len());
        let mut group_semester: HashMap<&str, &str> = HashMap::new();
        for (i, (rec, &row)) in records.iter().zip(rows).enumerate() {
            if !(0.0..=100.0).contains(&rec.grade) {
                return Err(RosterError::GradeRange { row, grade: rec.grade });
            }
            if let Some(value) = rec.intergrade {
                if !(0.0..=100.0).contains(&value) {
                    return Err(RosterError::IntergradeRange { row, value });
                }
            }
            if !(1..=6).contains(&rec.year) {
                return Err(RosterError::YearRange {
                    row,
                    year: rec.year.into(),
                });
            }
            if rec.group.is_empty() || !rec.uid.starts_with(&rec.group) || rec.uid.len() <= rec.group.len() {
                return Err(RosterError::GroupMismatch {
                    row,
                    uid: rec.uid.clone(),
                    group: rec.group.clone(),
                });
            }
            match group_semester.get(rec.group.as_str()) {
                Some(&sem) if sem != rec.semester => {
                    return Err(RosterError::SemesterConflict {
                        row,
                        group: rec.group.clone(),
                        expected: sem.to_string(),
                        found: rec.semester.clone(),
                    });
                }
                Some(_) => {}
                None => {
                    group_semester.insert(&rec.group, &rec.semester);
                }
            }
            if index.insert(rec.uid.clone(), i).is_some() {
                return Err(RosterError::DuplicateUid {
                    row,
                    uid: rec.uid.clone(),
                });
            }
        }
        Ok(Roster { records, index })
    }

    pub fn records(&self) -> &[StudentRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn node_of(&self, uid: &str) -> Option<usize> {
        self.index.get(uid).copied()
    }

    pub fn grades(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.grade).collect()
    }

    pub fn uids(&self) -> Vec<String> {
        self.records.iter().map(|r| r.uid.clone()).collect()
    }

    /// Semester labels in order of first appearance.
    pub fn semesters(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .filter(|r| seen.insert(r.semester.as_str()))
            .map(|r| r.semester.clone())
            .collect()
    }

    /// Sub-roster of one semester, record order preserved.
    pub fn filter_semester(&self, semester: &str) -> Result<Roster, RosterError> {
        Roster::new(
            self.records
                .iter()
                .filter(|r| r.semester == semester)
                .cloned()
                .collect(),
        )
    }
}

#[derive(Debug, Deserialize)]
struct RawRow {
    uid: String,
    semester: String,
    group: String,
    grade: String,
    gender: String,
    major: String,
    year: String,
    intergrade: String,
}

/// Parses roster CSV. Lines beginning with `#` are comments.
pub fn parse_roster(text: &str) -> Result<Roster, RosterError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| RosterError::Malformed {
            row: 1,
            reason: e.to_string(),
        })?
        .clone();
    if header.iter().ne(ROSTER_HEADER.iter().copied()) {
        return Err(RosterError::Header(header.iter().collect::<Vec<_>>().join(",")));
    }
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for result in reader.records() {
        let malformed = |e: csv::Error| RosterError::Malformed {
            row: e.position().map(|p| p.line()).unwrap_or(0),
            reason: e.to_string(),
        };
        let rec = result.map_err(malformed)?;
        let row = rec.position().map(|p| p.line()).unwrap_or(0);
        let raw: RawRow = rec.deserialize(Some(&header)).map_err(|e| RosterError::Malformed {
            row,
            reason: e.to_string(),
        })?;
        records.push(convert_row(raw, row)?);
        rows.push(row);
    }
    Roster::with_rows(records, &rows)
}

fn convert_row(raw: RawRow, row: u64) -> Result<StudentRecord, RosterError> {
    let malformed = |field: &str, value: &str| RosterError::Malformed {
        row,
        reason: format!("cannot parse {field} `{value}`"),
    };
    let grade: f64 = raw
        .grade
        .parse()
        .ok()
        .filter(|g: &f64| g.is_finite())
        .ok_or_else(|| malformed("grade", &raw.grade))?;
    let year: i64 = raw.year.parse().map_err(|_| malformed("year", &raw.year))?;
    if !(1..=6).contains(&year) {
        return Err(RosterError::YearRange { row, year });
    }
    let intergrade = if raw.intergrade.is_empty() {
        None
    } else {
        Some(
            raw.intergrade
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| malformed("intergrade", &raw.intergrade))?,
        )
    };
    if raw.uid.is_empty() {
        return Err(malformed("uid", ""));
    }
    Ok(StudentRecord {
        uid: raw.uid,
        semester: raw.semester,
        group: raw.group,
        grade,
        gender: raw.gender.parse().unwrap_or(Gender::Unknown),
        major: raw.major,
        year: year as u8,
        intergrade,
    })
}

/// Writes roster CSV (header plus one row per record, no comment line).
pub fn emit_roster(roster: &Roster) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(ROSTER_HEADER).expect("in-memory write");
    for r in roster.records() {
        let grade = r.grade.to_string();
        let year = r.year.to_string();
        let intergrade = r.intergrade.map(|v| v.to_string()).unwrap_or_default();
        writer
            .write_record([
                r.uid.as_str(),
                r.semester.as_str(),
                r.group.as_str(),
                grade.as_str(),
                r.gender.code(),
                r.major.as_str(),
                year.as_str(),
                intergrade.as_str(),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("flush")).expect("csv output is utf-8")
}

const GROUP_IDS: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
const MEMBER_IDS: &str = "123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";

/// Shape of a synthetic roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterSpec {
    pub semesters: usize,
    pub groups: usize,
    pub students: usize,
    pub majors: Vec<String>,
    pub years: Vec<u8>,
}

impl Default for RosterSpec {
    /// Three semesters, 13 groups, 53 students.
    fn default() -> Self {
        RosterSpec {
            semesters: 3,
            groups: 13,
            students: 53,
            majors: ["CS", "ENGR", "MGMT", "PWRT"].map(String::from).to_vec(),
            years: vec![1, 2, 3, 4],
        }
    }
}

fn semester_label(i: usize) -> String {
    let year = 2012 + i / 2;
    let season = if i.is_multiple_of(2) { 'S' } else { 'F' };
    format!("{season}{year}")
}

/// Deterministic synthetic roster.
///
/// Groups are split into contiguous semester blocks and students spread over
/// groups as evenly as possible. Letter bands A/B/C are dealt round-robin and
/// shuffled, so all three occur whenever there are at least three students.
pub fn generate_synthetic_roster(spec: &RosterSpec, seed: u64) -> Result<Roster, RosterError> {
    let fail = |msg: &str| Err(RosterError::Spec(msg.to_string()));
    if spec.semesters == 0 || spec.groups == 0 || spec.students == 0 {
        return fail("semesters, groups and students must all be at least 1");
    }
    if spec.majors.is_empty() || spec.years.is_empty() {
        return fail("major and year pools must be nonempty");
    }
    if spec.years.iter().any(|y| !(1..=6).contains(y)) {
        return fail("years must lie in 1..=6");
    }
    if spec.semesters > spec.groups {
        return fail("every semester needs at least one group");
    }
    if spec.groups > spec.students {
        return fail("every group needs at least one student");
    }
    if spec.groups > GROUP_IDS.len() {
        return fail("at most 52 groups");
    }
    let base = spec.students / spec.groups;
    let extra = spec.students % spec.groups;
    if base + usize::from(extra > 0) > MEMBER_IDS.len() {
        return fail("at most 35 students per group");
    }

    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut bands: Vec<f64> = (0..spec.students).map(|i| [90.0, 80.0, 70.0][i % 3]).collect();
    bands.shuffle(&mut rng);

    let group_chars: Vec<char> = GROUP_IDS.chars().collect();
    let member_chars: Vec<char> = MEMBER_IDS.chars().collect();
    let mut records = Vec::with_capacity(spec.students);
    for (g, group_char) in group_chars.iter().enumerate().take(spec.groups) {
        let semester = semester_label(g * spec.semesters / spec.groups);
        let group = group_char.to_string();
        let size = base + usize::from(g < extra);
        for member in &member_chars[..size] {
            let band = bands[records.len()];
            let grade = band + f64::from(rng.gen_range(0u32..100)) / 10.0;
            let intergrade = f64::from(rng.gen_range(700u32..=1000)) / 10.0;
            records.push(StudentRecord {
                uid: format!("{group}{member}"),
                semester: semester.clone(),
                group: group.clone(),
                grade,
                gender: if rng.gen_bool(0.5) { Gender::F } else { Gender::M },
                major: spec.majors[rng.gen_range(0..spec.majors.len())].clone(),
                year: spec.years[rng.gen_range(0..spec.years.len())],
                intergrade: Some(intergrade),
            });
        }
    }
    Roster::new(records)
}

/// Builds the friend approximation network. Node `i` is record `i`; labels
/// are the uids.
pub fn build_fan(roster: &Roster) -> Graph {
    let recs = roster.records();
    let mut edges = Vec::new();
    for i in 0..recs.len() {
        for j in i + 1..recs.len() {
            let (a, b) = (&recs[i], &recs[j]);
            let same_class = a.semester == b.semester;
            let same_group = a.group == b.group;
            let same_cohort = a.major == b.major && a.year == b.year;
            if same_class && (same_group || same_cohort) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(recs.len(), edges)
        .and_then(|g| g.with_labels(roster.uids()))
        .expect("record indices are in range")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LetterGrade {
    A,
    B,
    C,
    #[serde(rename = "D_or_below")]
    DOrBelow,
}

impl LetterGrade {
    pub const ALL: [LetterGrade; 4] = [LetterGrade::A, LetterGrade::B, LetterGrade::C, LetterGrade::DOrBelow];
}

impl fmt::Display for LetterGrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LetterGrade::A => "A",
            LetterGrade::B => "B",
            LetterGrade::C => "C",
            LetterGrade::DOrBelow => "D_or_below",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GradeError {
    #[error("grade {0} outside [0, 100]")]
    OutOfRange(f64),
    #[error("grade bands must satisfy 100 >= A > B > C >= 0, got {0}, {1}, {2}")]
    Bands(f64, f64, f64),
}

/// Lower bounds (inclusive) of the A, B and C bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradeBands {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for GradeBands {
    fn default() -> Self {
        GradeBands {
            a: 90.0,
            b: 80.0,
            c: 70.0,
        }
    }
}

impl GradeBands {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, GradeError> {
        if !(a <= 100.0 && a > b && b > c && c >= 0.0) {
            return Err(GradeError::Bands(a, b, c));
        }
        Ok(GradeBands { a, b, c })
    }

    pub fn classify(&self, grade: f64) -> Result<LetterGrade, GradeError> {
        if !(0.0..=100.0).contains(&grade) {
            return Err(GradeError::OutOfRange(grade));
        }
        Ok(if grade >= self.a {
            LetterGrade::A
        } else if grade >= self.b {
            LetterGrade::B
        } else if grade >= self.c {
            LetterGrade::C
        } else {
            LetterGrade::DOrBelow
        })
    }
}

pub fn letter_grade(grade: f64) -> Result<LetterGrade, GradeError> {
    GradeBands::default().classify(grade)
}
