//! Closed-form harvesting bounds, outcome classification, ideal free pair
//! detection, sustainable yield and the integral inequalities behind the
//! stability results.

use std::fmt;
use std::str::FromStr;

use crate::dynamics::{
    solve_semitrivial, Branch, CompetitionModel, HarvestRates, PopulationState, SimulationConfig,
    SimulationRun,
};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::operators::DiffusionOperator;
use crate::profiles::EnvironmentProfile;
use crate::scalar::Scalar;
use crate::spectral::{decreasing_root, principal_eigen};

/// Largest admissible fit residual `|K - gamma P - delta Q|_inf / |K|_inf`.
pub const PAIR_RESIDUAL_TOL: f64 = 1e-10;
/// `|A K|_inf` below this multiple of `|A|_inf |K|_inf` means `K` lies in the
/// kernel of `A`, i.e. the dispersal target is proportional to `K`.
pub const KERNEL_TOL: f64 = 1e-10;
/// `|w / K - 1|_inf` below this counts as `w ≡ K`.
pub const PROPORTIONAL_TOL: f64 = 1e-9;
/// Stationarity threshold (density per time) for a yield to count as sustainable.
pub const YIELD_STATIONARITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Coexistence,
    OnlyU,
    OnlyV,
    Extinction,
    /// The run ended without reaching a steady state and its classification
    /// was still changing.
    Unresolved,
}

impl Outcome {
    pub const ALL: [Outcome; 5] = [
        Outcome::Coexistence,
        Outcome::OnlyU,
        Outcome::OnlyV,
        Outcome::Extinction,
        Outcome::Unresolved,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Coexistence => "coexist",
            Outcome::OnlyU => "only_u",
            Outcome::OnlyV => "only_v",
            Outcome::Extinction => "extinct",
            Outcome::Unresolved => "unresolved",
        }
    }

    /// Outcome with the species labels exchanged.
    pub fn swapped(self) -> Self {
        match self {
            Outcome::OnlyU => Outcome::OnlyV,
            Outcome::OnlyV => Outcome::OnlyU,
            other => other,
        }
    }

    pub fn from_alive(u: bool, v: bool) -> Self {
        match (u, v) {
            (true, true) => Outcome::Coexistence,
            (true, false) => Outcome::OnlyU,
            (false, true) => Outcome::OnlyV,
            (false, false) => Outcome::Extinction,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Outcome::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown outcome {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeRecord<T> {
    pub outcome: Outcome,
    pub avg_u: T,
    pub avg_v: T,
    /// `alpha ∫ r u`.
    pub yield_u: T,
    /// `beta ∫ r v`.
    pub yield_v: T,
    pub alpha: T,
    pub beta: T,
}

impl<T: Scalar> OutcomeRecord<T> {
    pub fn total_yield(&self) -> T {
        self.yield_u + self.yield_v
    }
}

/// Average density below which a species counts as extinct.
pub fn extinction_threshold<T: Scalar>(env: &EnvironmentProfile<T>, cfg: &SimulationConfig<T>) -> T {
    cfg.extinction_fraction * env.average(&env.k).expect("validated")
}

/// Classifies a final state from the two average densities alone.
pub fn classify<T: Scalar>(
    state: &PopulationState<T>,
    env: &EnvironmentProfile<T>,
    rates: HarvestRates<T>,
    cfg: &SimulationConfig<T>,
) -> Result<OutcomeRecord<T>> {
    let avg_u = env.average(&state.u)?;
    let avg_v = env.average(&state.v)?;
    let threshold = extinction_threshold(env, cfg);
    let weighted = |w: &Field<T>| -> Result<T> { env.integrate(&env.r.zip_map(w, |r, x| r * x)?) };
    Ok(OutcomeRecord {
        outcome: Outcome::from_alive(avg_u >= threshold, avg_v >= threshold),
        avg_u,
        avg_v,
        yield_u: rates.alpha * weighted(&state.u)?,
        yield_v: rates.beta * weighted(&state.v)?,
        alpha: rates.alpha,
        beta: rates.beta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedRun<T> {
    pub record: OutcomeRecord<T>,
    pub run: SimulationRun<T>,
    /// Classification at `t_final / 2`, when the run got that far.
    pub midpoint: Option<Outcome>,
}

/// Simulates to `cfg.t_final` and classifies the final state.
///
/// A run that stops at a steady state is classified directly. A run that
/// reaches `t_final` without one is also classified halfway; if the two
/// classifications differ the record is marked [`Outcome::Unresolved`].
pub fn simulate_and_classify<T: Scalar>(
    model: &CompetitionModel<T>,
    initial: PopulationState<T>,
    rates: HarvestRates<T>,
    cfg: &SimulationConfig<T>,
) -> Result<ClassifiedRun<T>> {
    let env = model.env();
    let t0 = initial.t;
    let half = SimulationConfig {
        t_final: t0 + (cfg.t_final - t0) * T::lit(0.5),
        ..*cfg
    };
    let first = model.run_to_time(initial, rates, &half)?;
    if first.steady {
        let record = classify(&first.state, env, rates, cfg)?;
        return Ok(ClassifiedRun {
            record,
            run: first,
            midpoint: None,
        });
    }
    let midpoint = classify(&first.state, env, rates, cfg)?.outcome;
    let mut run = model.run_to_time(first.state, rates, cfg)?;
    run.steps += first.steps;
    run.clamped_mass += first.clamped_mass;
    let mut record = classify(&run.state, env, rates, cfg)?;
    if !run.steady && record.outcome != midpoint {
        record.outcome = Outcome::Unresolved;
    }
    Ok(ClassifiedRun {
        record,
        run,
        midpoint: Some(midpoint),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YieldReport<T> {
    /// `∫ alpha r u + ∫ beta r v`.
    pub sy: T,
    /// `∫ r K / 4`.
    pub msy_reference: T,
    /// `|Δstate|_inf / dt` over one further integrator step.
    pub residual: T,
    pub stationary: bool,
}

pub fn sustainable_yield<T: Scalar>(
    model: &CompetitionModel<T>,
    state: &PopulationState<T>,
    rates: HarvestRates<T>,
    cfg: &SimulationConfig<T>,
) -> Result<YieldReport<T>> {
    let record = classify(state, model.env(), rates, cfg)?;
    let mut probe = state.clone();
    let residual = model.stepper(rates, cfg.dt)?.step(&mut probe)? / cfg.dt;
    Ok(YieldReport {
        sy: record.total_yield(),
        msy_reference: model.env().msy(),
        residual,
        stationary: residual < T::lit(YIELD_STATIONARITY_TOL),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldBounds<T> {
    pub min: T,
    pub max: T,
}

impl<T: Scalar> FieldBounds<T> {
    fn of(f: &Field<T>) -> Self {
        Self {
            min: f.min(),
            max: f.max(),
        }
    }
}

/// Ranges of `K`, `v_beta*` and `K / P`; informational only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics<T> {
    pub k: FieldBounds<T>,
    pub v_star: FieldBounds<T>,
    pub k_over_p: FieldBounds<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport<T> {
    pub beta: T,
    /// `(1 - alpha*) / (1 - beta)`.
    pub c_star: T,
    /// `1 - ∫ r v_beta* / ∫ r K`.
    pub alpha_star: T,
    /// `1 - ∫ P r v_beta* / K / ∫ r P`, present when the environment is an
    /// ideal free pair.
    pub alpha_star_ifp: Option<T>,
    /// Positive solution of the `v` equation without `u`, harvested at `beta`.
    pub v_beta_star: Field<T>,
    pub diagnostics: Diagnostics<T>,
}

fn check_rate<T: Scalar>(name: &str, x: T) -> Result<()> {
    if x.is_finite() && x >= T::zero() && x < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in [0, 1), got {x}")))
    }
}

/// Semi-trivial state of `branch` under harvesting `rate`: growth scaled by
/// `1 - rate`, capacity `(1 - rate) K`.
pub fn harvested_semitrivial<T: Scalar>(
    model: &CompetitionModel<T>,
    branch: Branch,
    rate: T,
    cfg: &SimulationConfig<T>,
) -> Result<Field<T>> {
    check_rate(
        match branch {
            Branch::U => "alpha",
            Branch::V => "beta",
        },
        rate,
    )?;
    let keep = T::one() - rate;
    let k = model.env().k.scaled(keep);
    Ok(solve_semitrivial(model, branch, keep, &k, cfg)?.field)
}

fn alpha_star_from<T: Scalar>(env: &EnvironmentProfile<T>, v_star: &Field<T>) -> Result<T> {
    let rv = env.integrate(&env.r.zip_map(v_star, |r, v| r * v)?)?;
    let rk = env.integrate(&env.r.zip_map(&env.k, |r, k| r * k)?)?;
    Ok(T::one() - rv / rk)
}

fn alpha_star_ifp_from<T: Scalar>(env: &EnvironmentProfile<T>, v_star: &Field<T>) -> Result<T> {
    let n = v_star.len();
    let num: Field<T> = (0..n)
        .map(|i| env.p[i] * env.r[i] * v_star[i] / env.k[i])
        .collect::<Vec<_>>()
        .into();
    let den = env.integrate(&env.r.zip_map(&env.p, |r, p| r * p)?)?;
    Ok(T::one() - env.integrate(&num)? / den)
}

pub fn alpha_star<T: Scalar>(
    model: &CompetitionModel<T>,
    beta: T,
    cfg: &SimulationConfig<T>,
) -> Result<BoundsReport<T>> {
    let env = model.env();
    let v_star = harvested_semitrivial(model, Branch::V, beta, cfg)?;
    let alpha = alpha_star_from(env, &v_star)?;
    let alpha_ifp = match detect_ideal_free_pair(model) {
        PairDetection::Accepted(_) => Some(alpha_star_ifp_from(env, &v_star)?),
        PairDetection::Rejected { .. } => None,
    };
    let diagnostics = Diagnostics {
        k: FieldBounds::of(&env.k),
        v_star: FieldBounds::of(&v_star),
        k_over_p: FieldBounds::of(&env.k.zip_map(&env.p, |k, p| k / p)?),
    };
    Ok(BoundsReport {
        beta,
        c_star: (T::one() - alpha) / (T::one() - beta),
        alpha_star: alpha,
        alpha_star_ifp: alpha_ifp,
        v_beta_star: v_star,
        diagnostics,
    })
}

/// The ideal free pair estimate, evaluated whether or not `K` actually lies
/// in the cone of `P` and `Q`.
pub fn alpha_star_ifp<T: Scalar>(
    model: &CompetitionModel<T>,
    beta: T,
    cfg: &SimulationConfig<T>,
) -> Result<T> {
    let v_star = harvested_semitrivial(model, Branch::V, beta, cfg)?;
    alpha_star_ifp_from(model.env(), &v_star)
}

/// Potential of the `u` equation linearised at `(0, v)`: `r (1 - v/K - alpha)`.
pub fn invasion_potential<T: Scalar>(env: &EnvironmentProfile<T>, resident: &Field<T>, rate: T) -> Result<Field<T>> {
    let n = resident.len();
    env.grid().check(resident)?;
    Ok((0..n)
        .map(|i| env.r[i] * (T::one() - resident[i] / env.k[i] - rate))
        .collect::<Vec<_>>()
        .into())
}

/// Principal eigenvalue for `u` invading `(0, v_beta*)` at harvesting `alpha`.
pub fn u_invasion_eigenvalue<T: Scalar>(
    model: &CompetitionModel<T>,
    v_star: &Field<T>,
    alpha: T,
) -> Result<T> {
    let pot = invasion_potential(model.env(), v_star, alpha)?;
    Ok(principal_eigen(model.du(), &pot)?.sigma1)
}

/// Largest `alpha` at which `u` can still invade `(0, v_beta*)`: the sign
/// change of the principal eigenvalue, to within `tol`. `None` if `u` cannot
/// invade even unharvested.
pub fn invasion_threshold<T: Scalar>(
    model: &CompetitionModel<T>,
    beta: T,
    cfg: &SimulationConfig<T>,
    tol: T,
) -> Result<Option<T>> {
    let v_star = harvested_semitrivial(model, Branch::V, beta, cfg)?;
    // sigma1 <= max(potential) < 0 once alpha >= 1.
    decreasing_root(T::zero(), T::one(), tol, |alpha| {
        u_invasion_eigenvalue(model, &v_star, alpha)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealFreePair<T> {
    pub gamma: T,
    pub delta: T,
    /// `|K - gamma P - delta Q|_inf / |K|_inf`.
    pub residual: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRejection {
    ResidualTooLarge,
    /// One coefficient vanishes, so `K` is not strictly inside the cone.
    DegenerateHull,
    ProportionalToP,
    ProportionalToQ,
}

impl fmt::Display for PairRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairRejection::ResidualTooLarge => "K is not a combination of P and Q",
            PairRejection::DegenerateHull => "K lies on the boundary of the cone of P and Q",
            PairRejection::ProportionalToP => "P is proportional to K",
            PairRejection::ProportionalToQ => "Q is proportional to K",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairDetection<T> {
    Accepted(IdealFreePair<T>),
    Rejected {
        fit: IdealFreePair<T>,
        reason: PairRejection,
    },
}

impl<T> PairDetection<T> {
    pub fn accepted(&self) -> Option<&IdealFreePair<T>> {
        match self {
            PairDetection::Accepted(p) => Some(p),
            PairDetection::Rejected { .. } => None,
        }
    }

    pub fn fit(&self) -> &IdealFreePair<T> {
        match self {
            PairDetection::Accepted(p) | PairDetection::Rejected { fit: p, .. } => p,
        }
    }
}

/// `K` lies in the kernel of `op` up to rounding.
pub fn in_kernel<T: Scalar>(op: &DiffusionOperator<T>, w: &Field<T>) -> bool {
    let aw = op.apply(w).expect("same grid");
    aw.norm_inf() <= T::lit(KERNEL_TOL) * op.spectral_radius_bound() * w.norm_inf()
}

/// Nonnegative least-squares fit `K ≈ gamma P + delta Q`.
pub fn fit_pair<T: Scalar>(k: &Field<T>, p: &Field<T>, q: &Field<T>) -> IdealFreePair<T> {
    let dot = |a: &Field<T>, b: &Field<T>| -> T { a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum() };
    let (pp, pq, qq, pk, qk) = (dot(p, p), dot(p, q), dot(q, q), dot(p, k), dot(q, k));
    let residual = |g: T, d: T| -> T {
        let worst = (0..k.len()).fold(T::zero(), |m, i| m.max((k[i] - g * p[i] - d * q[i]).abs()));
        worst / k.norm_inf()
    };
    let mut candidates = Vec::with_capacity(3);
    let det = pp * qq - pq * pq;
    if det > T::epsilon() * pp * qq {
        let g = (qq * pk - pq * qk) / det;
        let d = (pp * qk - pq * pk) / det;
        if g >= T::zero() && d >= T::zero() {
            candidates.push((g, d));
        }
    }
    candidates.push(((pk / pp).max(T::zero()), T::zero()));
    candidates.push((T::zero(), (qk / qq).max(T::zero())));
    candidates
        .into_iter()
        .map(|(g, d)| IdealFreePair {
            gamma: g,
            delta: d,
            residual: residual(g, d),
        })
        .min_by(|a, b| a.residual.partial_cmp(&b.residual).expect("finite"))
        .expect("nonempty")
}

pub fn detect_ideal_free_pair<T: Scalar>(model: &CompetitionModel<T>) -> PairDetection<T> {
    let env = model.env();
    let fit = fit_pair(&env.k, &env.p, &env.q);
    let floor = T::lit(PAIR_RESIDUAL_TOL);
    let reason = if fit.residual >= floor {
        Some(PairRejection::ResidualTooLarge)
    } else if fit.gamma <= floor || fit.delta <= floor {
        Some(PairRejection::DegenerateHull)
    } else if in_kernel(model.du(), &env.k) {
        Some(PairRejection::ProportionalToP)
    } else if in_kernel(model.dv(), &env.k) {
        Some(PairRejection::ProportionalToQ)
    } else {
        None
    };
    match reason {
        None => PairDetection::Accepted(fit),
        Some(reason) => PairDetection::Rejected { fit, reason },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Holds,
    Violated,
    /// Hypotheses not met; `margin` is still reported.
    Skipped,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Holds => "holds",
            CheckStatus::Violated => "violated",
            CheckStatus::Skipped => "skipped",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityCheck<T> {
    pub name: &'static str,
    pub statement: &'static str,
    /// Left side minus right side; positive when the inequality holds.
    pub margin: T,
    pub status: CheckStatus,
}

impl<T: Scalar> InequalityCheck<T> {
    fn new(name: &'static str, statement: &'static str, margin: T, applicable: bool) -> Self {
        let status = if !applicable {
            CheckStatus::Skipped
        } else if margin > T::zero() {
            CheckStatus::Holds
        } else {
            CheckStatus::Violated
        };
        Self {
            name,
            statement,
            margin,
            status,
        }
    }
}

fn proportional<T: Scalar>(w: &Field<T>, k: &Field<T>) -> bool {
    (0..w.len()).all(|i| (w[i] / k[i] - T::one()).abs() < T::lit(PROPORTIONAL_TOL))
}

/// Evaluates the integral inequalities on the unharvested semi-trivial states
/// of `model`, and on the Fisher control `a = P = 1`, `r = K`.
pub fn inequality_suite<T: Scalar>(
    model: &CompetitionModel<T>,
    cfg: &SimulationConfig<T>,
) -> Result<Vec<InequalityCheck<T>>> {
    let env = model.env();
    let int = |f: Field<T>| env.integrate(&f).expect("same grid");
    let u_star = solve_semitrivial(model, Branch::U, T::one(), &env.k, cfg)?.field;
    let v_star = solve_semitrivial(model, Branch::V, T::one(), &env.k, cfg)?.field;
    let rk = int(env.r.zip_map(&env.k, |r, k| r * k)?);
    let mut out = Vec::new();

    for (name, stmt, w) in [
        ("capacity_u", "∫ r K > ∫ r u*", &u_star),
        ("capacity_v", "∫ r K > ∫ r v*", &v_star),
    ] {
        let margin = rk - int(env.r.zip_map(w, |r, x| r * x)?);
        out.push(InequalityCheck::new(name, stmt, margin, !proportional(w, &env.k)));
    }
    for (name, stmt, w, target) in [
        ("weighted_u", "∫ r P (u*/K - 1) > 0", &u_star, &env.p),
        ("weighted_v", "∫ r Q (v*/K - 1) > 0", &v_star, &env.q),
    ] {
        let f: Field<T> = (0..w.len())
            .map(|i| env.r[i] * target[i] * (w[i] / env.k[i] - T::one()))
            .collect::<Vec<_>>()
            .into();
        out.push(InequalityCheck::new(name, stmt, int(f), !proportional(w, &env.k)));
    }
    {
        let f: Field<T> = (0..u_star.len())
            .map(|i| env.r[i] * env.q[i] * (T::one() - u_star[i] / env.k[i]))
            .collect::<Vec<_>>()
            .into();
        let pair = detect_ideal_free_pair(model).accepted().is_some();
        out.push(InequalityCheck::new(
            "pair_invasion_v",
            "∫ r Q (1 - u*/K) > 0",
            int(f),
            pair,
        ));
    }
    {
        let grid = env.grid();
        let one = grid.constant(T::one());
        let fisher = CompetitionModel::new(EnvironmentProfile::new(
            grid.clone(),
            env.k.clone(),
            env.k.clone(),
            one.clone(),
            one.clone(),
            one.clone(),
            one,
        )?)?;
        let w = solve_semitrivial(&fisher, Branch::U, T::one(), &env.k, cfg)?.field;
        let margin = int(w.clone()) - int(env.k.clone());
        out.push(InequalityCheck::new(
            "fisher_average",
            "∫ u* > ∫ K  (a = P = 1, r = K)",
            margin,
            !proportional(&w, &env.k),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use crate::profiles::{
        example_cosine, example_gaussian, example_ideal_free_pair, example_peaked_pair,
        example_peaked_proportional, ProfileSet,
    };

    fn model(set: ProfileSet, n: usize) -> CompetitionModel<f64> {
        let g = SpatialGrid::new(4.0, n).unwrap();
        CompetitionModel::new(set.build(&g).unwrap()).unwrap()
    }

    fn cfg() -> SimulationConfig<f64> {
        SimulationConfig::default()
    }

    #[test]
    fn outcome_names_round_trip() {
        for o in Outcome::ALL {
            assert_eq!(o.as_str().parse::<Outcome>().unwrap(), o);
            assert_eq!(o.swapped().swapped(), o);
        }
        assert!("both".parse::<Outcome>().is_err());
    }

    #[test]
    fn classify_by_threshold() {
        let m = model(example_cosine(), 40);
        let env = m.env();
        let g = m.grid();
        let c = cfg();
        let thr = extinction_threshold(env, &c);
        assert!((thr - c.extinction_fraction * 2.0).abs() < 1e-12);
        let rates = HarvestRates::new(0.5, 0.6).unwrap();
        let cases = [
            (1.0, 1.0, Outcome::Coexistence),
            (1.0, 0.5 * thr, Outcome::OnlyU),
            (0.5 * thr, 1.0, Outcome::OnlyV),
            (0.0, 0.0, Outcome::Extinction),
            (thr, thr, Outcome::Coexistence),
        ];
        for (u, v, want) in cases {
            let s = PopulationState::constant(g, u, v).unwrap();
            let rec = classify(&s, env, rates, &c).unwrap();
            assert_eq!(rec.outcome, want, "{u} {v}");
            assert!((rec.yield_u - 0.5 * 1.1 * 4.0 * u).abs() < 1e-12);
            assert!((rec.yield_v - 0.6 * 1.1 * 4.0 * v).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_star_cosine_example() {
        let m = model(example_cosine(), 800);
        let rep = alpha_star(&m, 0.4, &cfg()).unwrap();
        assert!((rep.alpha_star - 0.4671).abs() < 0.01, "{}", rep.alpha_star);
        assert!((rep.c_star - (1.0 - rep.alpha_star) / 0.6).abs() < 1e-15);
        assert!(rep.alpha_star_ifp.is_none());
        assert_eq!(rep.diagnostics.k.max, m.env().k.max());
        assert!((rep.diagnostics.k_over_p.min - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alpha_star_gaussian_example() {
        let m = model(example_gaussian(), 800);
        let rep = alpha_star(&m, 0.2, &cfg()).unwrap();
        assert!((rep.alpha_star - 0.3743).abs() < 0.01, "{}", rep.alpha_star);
    }

    #[test]
    fn alpha_star_collapses_for_constant_profiles() {
        let m = model(ProfileSet::new("3", "0.7", "1+x", "2", "1.5", "2"), 100);
        for beta in [0.0, 0.3, 0.9] {
            let rep = alpha_star(&m, beta, &cfg()).unwrap();
            assert!((rep.alpha_star - beta).abs() < 1e-12);
            assert!((alpha_star_ifp(&m, beta, &cfg()).unwrap() - beta).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_star_ifp_example() {
        let m = model(example_ideal_free_pair(), 800);
        for (beta, want) in [(0.0, 0.0029), (0.8, 0.8007)] {
            let rep = alpha_star(&m, beta, &cfg()).unwrap();
            let got = rep.alpha_star_ifp.unwrap();
            assert!((got - want).abs() < 0.005, "{beta}: {got}");
        }
    }

    #[test]
    fn alpha_star_increasing_and_above_beta() {
        for set in [example_cosine(), example_gaussian(), example_ideal_free_pair()] {
            let m = model(set, 200);
            let mut prev = -1.0;
            for i in 0..10 {
                let beta = i as f64 / 10.0;
                let a = alpha_star(&m, beta, &cfg()).unwrap().alpha_star;
                assert!(a > beta && a < 1.0, "{beta}: {a}");
                assert!(a > prev);
                prev = a;
            }
        }
    }

    #[test]
    fn alpha_star_rejects_bad_beta() {
        let m = model(example_cosine(), 50);
        for beta in [-0.1, 1.0, f64::NAN] {
            assert!(matches!(alpha_star(&m, beta, &cfg()), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn pair_detection() {
        let m = model(example_ideal_free_pair(), 800);
        let p = *detect_ideal_free_pair(&m).accepted().unwrap();
        assert!((p.gamma - 1.0).abs() < 1e-12 && (p.delta - 1.0).abs() < 1e-12);
        assert!(p.residual < 1e-12);

        let m = model(example_peaked_pair(), 800);
        let p = *detect_ideal_free_pair(&m).accepted().unwrap();
        assert!((p.gamma - 1.0).abs() < 1e-10 && (p.delta - 1.0).abs() < 1e-10);

        let m = model(example_cosine(), 800);
        match detect_ideal_free_pair(&m) {
            PairDetection::Rejected { fit, reason } => {
                assert_eq!(reason, PairRejection::DegenerateHull);
                assert!((fit.gamma - 1.0).abs() < 1e-12 && fit.delta.abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }

        // K = P + Q exactly, but both targets are proportional to K.
        let m = model(ProfileSet::new("2+cos(pi*x)", "1", "1+0.5*cos(pi*x)", "1+0.5*cos(pi*x)", "1", "1"), 100);
        let det = detect_ideal_free_pair(&m);
        assert!(det.accepted().is_none());
        assert!(det.fit().residual < 1e-12);

        let m = model(example_gaussian(), 200);
        assert!(matches!(
            detect_ideal_free_pair(&m),
            PairDetection::Rejected { reason: PairRejection::DegenerateHull, .. }
        ));
        let m = model(ProfileSet::new("2+cos(pi*x)", "1", "1+x", "1", "1", "1"), 200);
        assert!(matches!(
            detect_ideal_free_pair(&m),
            PairDetection::Rejected { reason: PairRejection::ResidualTooLarge, .. }
        ));
    }

    #[test]
    fn fit_pair_recovers_coefficients() {
        let g = SpatialGrid::new(4.0, 60).unwrap();
        let p = g.sample_fn(|x: f64| 1.0 + x);
        let q = g.sample_fn(|x: f64| (x * 0.7).cos() + 2.0);
        let k: Field<f64> = (0..60).map(|i| 0.3 * p[i] + 2.5 * q[i]).collect::<Vec<_>>().into();
        let fit = fit_pair(&k, &p, &q);
        assert!((fit.gamma - 0.3).abs() < 1e-10 && (fit.delta - 2.5).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn yield_of_proportional_harvest_reaches_msy() {
        let m = model(example_cosine(), 800);
        let env = m.env();
        let rates = HarvestRates::new(0.5, 0.6).unwrap();
        let s = PopulationState::new(env.k.scaled(0.5), m.grid().constant(0.0)).unwrap();
        let y = sustainable_yield(&m, &s, rates, &cfg()).unwrap();
        assert!((y.msy_reference - 2.2).abs() < 1e-9);
        assert!((y.sy - 2.2).abs() < 1e-9);
        assert!(y.stationary);

        let s = PopulationState::new(env.k.clone(), m.grid().constant(0.0)).unwrap();
        let y = sustainable_yield(&m, &s, HarvestRates::new(0.0, 0.0).unwrap(), &cfg()).unwrap();
        assert_eq!(y.sy, 0.0);
        assert!(y.stationary);
    }

    #[test]
    fn yield_of_ideal_free_pair_reaches_msy() {
        let m = model(example_ideal_free_pair(), 400);
        let env = m.env();
        let s = PopulationState::new(env.p.scaled(0.5), env.q.scaled(0.5)).unwrap();
        let y = sustainable_yield(&m, &s, HarvestRates::new(0.5, 0.5).unwrap(), &cfg()).unwrap();
        assert!((y.sy - y.msy_reference).abs() < 1e-9 * y.msy_reference);
        assert!(y.stationary);
    }

    #[test]
    fn transient_yield_is_flagged() {
        let m = model(example_cosine(), 100);
        let s = PopulationState::constant(m.grid(), 2.1, 2.1).unwrap();
        let y = sustainable_yield(&m, &s, HarvestRates::new(0.2, 0.2).unwrap(), &cfg()).unwrap();
        assert!(!y.stationary);
    }

    fn by_name<'a>(checks: &'a [InequalityCheck<f64>], name: &str) -> &'a InequalityCheck<f64> {
        checks.iter().find(|c| c.name == name).unwrap()
    }

    #[test]
    fn inequality_suite_cosine() {
        let m = model(example_cosine(), 400);
        let checks = inequality_suite(&m, &cfg()).unwrap();
        assert_eq!(by_name(&checks, "capacity_v").status, CheckStatus::Holds);
        assert_eq!(by_name(&checks, "weighted_v").status, CheckStatus::Holds);
        assert_eq!(by_name(&checks, "fisher_average").status, CheckStatus::Holds);
        for name in ["capacity_u", "weighted_u", "pair_invasion_v"] {
            assert_eq!(by_name(&checks, name).status, CheckStatus::Skipped, "{name}");
        }
        assert!(by_name(&checks, "capacity_u").margin.abs() < 1e-12);
    }

    #[test]
    fn inequality_suite_pairs() {
        for set in [example_ideal_free_pair(), example_peaked_pair()] {
            let m = model(set, 400);
            let checks = inequality_suite(&m, &cfg()).unwrap();
            for c in &checks {
                assert_eq!(c.status, CheckStatus::Holds, "{}: {}", c.name, c.margin);
            }
        }
        let m = model(example_peaked_proportional(), 400);
        let checks = inequality_suite(&m, &cfg()).unwrap();
        assert_eq!(by_name(&checks, "weighted_u").status, CheckStatus::Skipped);
        assert_eq!(by_name(&checks, "weighted_v").status, CheckStatus::Holds);
    }

    #[test]
    fn constant_environment_skips_everything() {
        let m = model(ProfileSet::new("2", "1", "1", "3", "1", "2"), 50);
        let checks = inequality_suite(&m, &cfg()).unwrap();
        for c in checks {
            assert_eq!(c.status, CheckStatus::Skipped, "{}", c.name);
        }
    }

    #[test]
    fn invasion_threshold_brackets_sign_change() {
        let m = model(example_cosine(), 200);
        let c = cfg();
        let a = invasion_threshold(&m, 0.0, &c, 1e-10).unwrap().unwrap();
        let v = harvested_semitrivial(&m, Branch::V, 0.0, &c).unwrap();
        assert!(u_invasion_eigenvalue(&m, &v, a - 1e-6).unwrap() > 0.0);
        assert!(u_invasion_eigenvalue(&m, &v, a + 1e-6).unwrap() < 0.0);
        // Constant r: sigma1 is affine in alpha with slope -r.
        let s0 = u_invasion_eigenvalue(&m, &v, 0.0).unwrap();
        assert!((a - s0 / 1.1).abs() < 1e-9);
        let rep = alpha_star(&m, 0.0, &c).unwrap();
        assert!(a >= rep.alpha_star, "{a} < {}", rep.alpha_star);
    }
}
