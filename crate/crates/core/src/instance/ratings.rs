//! Recommendation instances from a completed ratings matrix.
//!
//! Ratings rows are `user,movie,rating[,observed]`. `observed` is `1` for a
//! rating the user actually gave and `0` for a predicted (completed) entry;
//! it defaults to `1`. Genre rows are `movie,genre`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use rand::seq::index;
use rand::Rng;

use super::{Edge, Instance, OfflineVertex, OnlineType, Problem};
use crate::submodular::{Objective, PerUserCoverage};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatingsParams {
    pub num_users: usize,
    pub num_movies: usize,
    pub seed: u64,
    /// Every user arrives with probability `1/T` and `T = |V|`.
    pub integral_rates: bool,
}

struct Rating {
    value: f64,
    observed: bool,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader.lines().enumerate().map(|(i, l)| (i + 1, l))
}

fn is_skippable(line: &str, lineno: usize, header: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#') || (lineno == 1 && t.starts_with(header))
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

/// Builds the recommendation instance: movies are offline vertices, users
/// online types, and `(movie, user)` is an edge iff the user has not rated
/// the movie. User `v`'s weight for genre `z` is the mean of all of `v`'s
/// ratings (observed or predicted) over movies carrying `z`.
///
/// Users are the `num_users` with the most observed ratings (ties by id);
/// movies are a seeded uniform sample of `num_movies` from those rated.
/// Rates are either integral, or uniform in `(0, 1]` normalised to arrival
/// probabilities summing to one with `T = ⌊1 / max_v p_v⌋` so every `r_v ≤ 1`.
pub fn ingest_ratings<R1: BufRead, R2: BufRead>(ratings: R1, genres: R2, params: RatingsParams) -> Result<Problem> {
    let mut table: BTreeMap<String, BTreeMap<String, Rating>> = BTreeMap::new();
    let mut movies: BTreeSet<String> = BTreeSet::new();
    for (lineno, line) in data_lines(ratings) {
        let line = line?;
        if is_skippable(&line, lineno, "user") {
            continue;
        }
        let f = split_fields(&line);
        if f.len() != 3 && f.len() != 4 {
            return Err(parse_err(lineno, format!("expected 3 or 4 fields, found {}", f.len())));
        }
        if f[0].is_empty() || f[1].is_empty() {
            return Err(parse_err(lineno, "empty user or movie id"));
        }
        let value: f64 = f[2]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| parse_err(lineno, format!("bad rating {:?}", f[2])))?;
        let observed = match f.get(3) {
            None | Some(&"1") => true,
            Some(&"0") => false,
            Some(other) => return Err(parse_err(lineno, format!("bad observed flag {other:?}"))),
        };
        let row = table.entry(f[0].to_string()).or_default();
        if row.insert(f[1].to_string(), Rating { value, observed }).is_some() {
            return Err(parse_err(lineno, format!("duplicate rating for ({}, {})", f[0], f[1])));
        }
        movies.insert(f[1].to_string());
    }

    let mut movie_genres: HashMap<String, Vec<String>> = HashMap::new();
    let mut genre_names: BTreeSet<String> = BTreeSet::new();
    for (lineno, line) in data_lines(genres) {
        let line = line?;
        if is_skippable(&line, lineno, "movie") {
            continue;
        }
        let f = split_fields(&line);
        if f.len() != 2 || f[0].is_empty() || f[1].is_empty() {
            return Err(parse_err(lineno, "expected `movie,genre`"));
        }
        movie_genres.entry(f[0].to_string()).or_default().push(f[1].to_string());
        genre_names.insert(f[1].to_string());
    }
    let genre_index: HashMap<&str, u32> = genre_names
        .iter()
        .enumerate()
        .map(|(i, g)| (g.as_str(), i as u32))
        .collect();
    let genres_of = |movie: &str| -> Vec<u32> {
        let mut g: Vec<u32> = movie_genres
            .get(movie)
            .map(|gs| gs.iter().map(|g| genre_index[g.as_str()]).collect())
            .unwrap_or_default();
        g.sort_unstable();
        g.dedup();
        g
    };

    if table.len() < params.num_users {
        return Err(Error::InvalidArgument(format!(
            "requested {} users but the ratings file has {}",
            params.num_users,
            table.len()
        )));
    }
    if movies.len() < params.num_movies {
        return Err(Error::InvalidArgument(format!(
            "requested {} movies but the ratings file has {}",
            params.num_movies,
            movies.len()
        )));
    }

    let mut by_activity: Vec<(&String, usize)> = table
        .iter()
        .map(|(u, row)| (u, row.values().filter(|r| r.observed).count()))
        .collect();
    by_activity.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut users: Vec<&String> = by_activity[..params.num_users].iter().map(|(u, _)| *u).collect();
    users.sort();

    let mut rng = crate::rng_for(params.seed, 0);
    let all_movies: Vec<&String> = movies.iter().collect();
    let mut picked = index::sample(&mut rng, all_movies.len(), params.num_movies).into_vec();
    picked.sort_unstable();
    let selected: Vec<&String> = picked.iter().map(|&i| all_movies[i]).collect();

    let offline = selected
        .iter()
        .map(|m| OfflineVertex {
            id: (*m).clone(),
            capacity: 1,
        })
        .collect();

    let num_genres = genre_names.len();
    let mut edges = Vec::new();
    let mut edge_genres = Vec::new();
    let mut edge_user = Vec::new();
    let mut user_weights = Vec::with_capacity(users.len());
    for (v, user) in users.iter().enumerate() {
        let row = &table[*user];
        for (u, movie) in selected.iter().enumerate() {
            if row.get(*movie).is_some_and(|r| r.observed) {
                continue;
            }
            edges.push(Edge {
                id: format!("e{}", edges.len()),
                u,
                v,
            });
            edge_genres.push(genres_of(movie));
            edge_user.push(v);
        }
        let mut sums = vec![0.0; num_genres];
        let mut counts = vec![0usize; num_genres];
        for (movie, rating) in row {
            for z in genres_of(movie) {
                sums[z as usize] += rating.value;
                counts[z as usize] += 1;
            }
        }
        user_weights.push(
            sums.iter()
                .zip(&counts)
                .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
                .collect::<Vec<f64>>(),
        );
    }

    let (rates, horizon) = if params.integral_rates {
        (vec![1.0; users.len()], users.len() as u32)
    } else {
        let raw: Vec<f64> = (0..users.len()).map(|_| 1.0 - rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|a| a / total).collect();
        let max_p = probs.iter().cloned().fold(0.0, f64::max);
        let horizon = ((1.0 / max_p).floor() as u32).max(1);
        (probs.iter().map(|p| p * horizon as f64).collect(), horizon)
    };
    let online = users
        .iter()
        .zip(&rates)
        .map(|(u, &rate)| OnlineType {
            id: (*u).clone(),
            rate: rate.min(1.0),
        })
        .collect();
    let instance = Instance::new(offline, online, edges, horizon, 1);
    let objective = Objective::PerUserCoverage(PerUserCoverage::new(edge_genres, edge_user, user_weights)?);
    Ok(Problem { instance, objective })
}
