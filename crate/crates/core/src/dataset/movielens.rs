//! Parsers for the `::`-separated MovieLens-1M files.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::DatasetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRating {
    pub user_id: u32,
    pub item_id: u32,
    pub rating: u8,
    pub timestamp: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    F,
    M,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::F, Gender::M];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            Gender::F => "F",
            Gender::M => "M",
        }
    }
}

/// The seven MovieLens age-group codes, in canonical order.
pub const AGE_CODES: [u8; 7] = [1, 18, 25, 35, 45, 50, 56];

/// Number of occupation codes (0..=20).
pub const N_OCCUPATIONS: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgeGroup(u8);

impl AgeGroup {
    pub fn from_code(code: u8) -> Option<Self> {
        AGE_CODES.contains(&code).then_some(AgeGroup(code))
    }

    pub fn from_index(index: usize) -> Option<Self> {
        AGE_CODES.get(index).map(|&c| AgeGroup(c))
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        AGE_CODES
            .iter()
            .position(|&c| c == self.0)
            .expect("constructed from a valid code")
    }
}

macro_rules! genres {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum Genre { $($variant),+ }

        impl Genre {
            pub const ALL: [Genre; 18] = [$(Genre::$variant),+];

            pub fn name(self) -> &'static str {
                match self { $(Genre::$variant => $name),+ }
            }

            pub fn parse(token: &str) -> Option<Genre> {
                match token { $($name => Some(Genre::$variant),)+ _ => None }
            }
        }
    };
}

genres! {
    Action => "Action",
    Adventure => "Adventure",
    Animation => "Animation",
    Children => "Children's",
    Comedy => "Comedy",
    Crime => "Crime",
    Documentary => "Documentary",
    Drama => "Drama",
    Fantasy => "Fantasy",
    FilmNoir => "Film-Noir",
    Horror => "Horror",
    Musical => "Musical",
    Mystery => "Mystery",
    Romance => "Romance",
    SciFi => "Sci-Fi",
    Thriller => "Thriller",
    War => "War",
    Western => "Western",
}

impl Genre {
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: u32,
    pub gender: Gender,
    pub age: AgeGroup,
    pub occupation: u8,
}

impl UserProfile {
    /// Line in `users.dat` format. The zip column is written as `00000`.
    pub fn to_dat_line(&self) -> String {
        format!(
            "{}::{}::{}::{}::00000",
            self.user_id,
            self.gender.code(),
            self.age.code(),
            self.occupation
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemProfile {
    pub item_id: u32,
    pub title: String,
    pub year: i32,
    pub genres: Vec<Genre>,
}

impl ItemProfile {
    /// Line in `movies.dat` format; `title` must already carry the year suffix.
    pub fn to_dat_line(&self) -> String {
        let genres: Vec<&str> = self.genres.iter().map(|g| g.name()).collect();
        format!("{}::{}::{}", self.item_id, self.title, genres.join("|"))
    }
}

impl RawRating {
    pub fn to_dat_line(&self) -> String {
        format!(
            "{}::{}::{}::{}",
            self.user_id, self.item_id, self.rating, self.timestamp
        )
    }
}

/// Decodes ISO-8859-1 bytes. Every byte maps to the code point of equal value.
pub fn decode_latin1(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| b as char).collect()
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_err(line: usize, msg: impl Into<String>) -> DatasetError {
    DatasetError::Parse {
        line,
        message: msg.into(),
    }
}

fn invalid(line: usize, msg: impl Into<String>) -> DatasetError {
    DatasetError::Validation {
        line,
        message: msg.into(),
    }
}

fn positive_id(line: usize, what: &str, tok: &str) -> Result<u32, DatasetError> {
    let id: u32 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))?;
    if id == 0 {
        return Err(invalid(line, format!("{what} must be positive")));
    }
    Ok(id)
}

/// Parses `uid::mid::rating::timestamp` lines. Blank lines are skipped.
pub fn parse_ratings(text: &str) -> Result<Vec<RawRating>, DatasetError> {
    let mut out = Vec::new();
    for (n, line) in lines(text) {
        let parts: Vec<&str> = line.split("::").collect();
        let [uid, mid, rating, ts] = parts[..] else {
            return Err(parse_err(
                n,
                format!("expected 4 `::` fields, found {}", parts.len()),
            ));
        };
        let user_id = positive_id(n, "user id", uid)?;
        let item_id = positive_id(n, "item id", mid)?;
        let rating: u8 = rating
            .parse()
            .map_err(|_| parse_err(n, format!("bad rating `{rating}`")))?;
        if !(1..=5).contains(&rating) {
            return Err(invalid(n, format!("rating {rating} outside 1..5")));
        }
        let timestamp: i64 = ts
            .parse()
            .map_err(|_| parse_err(n, format!("bad timestamp `{ts}`")))?;
        out.push(RawRating {
            user_id,
            item_id,
            rating,
            timestamp,
        });
    }
    Ok(out)
}

/// Parses `uid::gender::age::occupation::zip` lines. The zip code is dropped.
pub fn parse_users(text: &str) -> Result<Vec<UserProfile>, DatasetError> {
    let mut out = Vec::new();
    for (n, line) in lines(text) {
        let parts: Vec<&str> = line.split("::").collect();
        let [uid, gender, age, occupation, _zip] = parts[..] else {
            return Err(parse_err(
                n,
                format!("expected 5 `::` fields, found {}", parts.len()),
            ));
        };
        let user_id = positive_id(n, "user id", uid)?;
        let gender = match gender {
            "F" => Gender::F,
            "M" => Gender::M,
            other => return Err(invalid(n, format!("unknown gender `{other}`"))),
        };
        let age = age
            .parse::<u8>()
            .ok()
            .and_then(AgeGroup::from_code)
            .ok_or_else(|| invalid(n, format!("unknown age code `{age}`")))?;
        let occupation = occupation
            .parse::<u8>()
            .ok()
            .filter(|&o| (o as usize) < N_OCCUPATIONS)
            .ok_or_else(|| invalid(n, format!("unknown occupation `{occupation}`")))?;
        out.push(UserProfile {
            user_id,
            gender,
            age,
            occupation,
        });
    }
    Ok(out)
}

/// Extracts the year from a title ending in `(YYYY)`.
pub fn title_year(title: &str) -> Option<i32> {
    let t = title.trim_end();
    let inner = t.strip_suffix(')')?;
    let open = inner.rfind('(')?;
    let digits = &inner[open + 1..];
    if digits.len() != 4 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Parses `mid::title (year)::genre|genre` lines.
pub fn parse_items(text: &str) -> Result<Vec<ItemProfile>, DatasetError> {
    let mut out = Vec::new();
    for (n, line) in lines(text) {
        let (mid, rest) = line
            .split_once("::")
            .ok_or_else(|| parse_err(n, "expected `id::title::genres`"))?;
        let (title, genres) = rest
            .rsplit_once("::")
            .ok_or_else(|| parse_err(n, "expected `id::title::genres`"))?;
        let item_id = positive_id(n, "item id", mid)?;
        let year = title_year(title)
            .ok_or_else(|| invalid(n, format!("title `{title}` lacks a (YYYY) suffix")))?;
        let mut parsed = Vec::new();
        for tok in genres.split('|') {
            let g = Genre::parse(tok).ok_or_else(|| invalid(n, format!("unknown genre `{tok}`")))?;
            if !parsed.contains(&g) {
                parsed.push(g);
            }
        }
        out.push(ItemProfile {
            item_id,
            title: title.to_string(),
            year,
            genres: parsed,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rating_line() {
        let r = parse_ratings("1::1193::5::978300760\n").unwrap();
        assert_eq!(
            r,
            vec![RawRating {
                user_id: 1,
                item_id: 1193,
                rating: 5,
                timestamp: 978300760
            }]
        );
    }

    #[test]
    fn empty_stream() {
        assert!(parse_ratings("").unwrap().is_empty());
    }

    #[test]
    fn rating_out_of_range_is_validation_error() {
        let err = parse_ratings("1::1193::9::0").unwrap_err();
        assert!(matches!(err, DatasetError::Validation { line: 1, .. }), "{err}");
    }

    #[test]
    fn malformed_rating_reports_line() {
        let err = parse_ratings("1::2::3::4\n1::2::3\n").unwrap_err();
        assert!(matches!(err, DatasetError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn user_line() {
        let u = parse_users("1::F::1::10::48067").unwrap();
        assert_eq!(u[0].user_id, 1);
        assert_eq!(u[0].gender, Gender::F);
        assert_eq!(u[0].age.code(), 1);
        assert_eq!(u[0].occupation, 10);
    }

    #[test]
    fn unknown_age_named() {
        let err = parse_users("1::F::2::10::48067").unwrap_err().to_string();
        assert!(err.contains("`2`"), "{err}");
    }

    #[test]
    fn item_line() {
        let items = parse_items("1::Toy Story (1995)::Animation|Children's|Comedy").unwrap();
        assert_eq!(items[0].year, 1995);
        assert_eq!(
            items[0].genres,
            vec![Genre::Animation, Genre::Children, Genre::Comedy]
        );
    }

    #[test]
    fn item_without_year() {
        assert!(matches!(
            parse_items("2::No Year::Drama").unwrap_err(),
            DatasetError::Validation { .. }
        ));
    }

    #[test]
    fn unknown_genre_named() {
        let err = parse_items("2::X (1990)::Drama|Opera").unwrap_err().to_string();
        assert!(err.contains("Opera"), "{err}");
    }

    #[test]
    fn latin1_titles_decode() {
        let bytes = b"5::Cit\xe9 (1995)::Drama\n";
        let items = parse_items(&decode_latin1(bytes)).unwrap();
        assert_eq!(items[0].title, "Cit\u{e9} (1995)");
    }

    #[test]
    fn dat_lines_round_trip() {
        let u = parse_users("7::M::56::20::1").unwrap().remove(0);
        assert_eq!(parse_users(&u.to_dat_line()).unwrap()[0], u);
        let i = parse_items("3::A (2000)::War|Western").unwrap().remove(0);
        assert_eq!(parse_items(&i.to_dat_line()).unwrap()[0], i);
    }
}
