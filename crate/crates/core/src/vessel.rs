//! Six-DOF ship model in head seas.
//!
//! The vessel is described by rigid-body mass `M`, constant added mass `A`,
//! linear damping `B` and hydrostatic stiffness `C`. Equations are solved in
//! ship-fixed velocities with earth-fixed positions and Euler angles; the
//! axis convention is x forward, y starboard, z down, pitch positive bow up.
//!
//! Wave excitation is linear in the component amplitudes and is evaluated
//! from heave-force and pitch-moment transfer curves tabulated against
//! encounter frequency. The default curves come from a Froude-Krylov
//! integration over a box-shaped hull; they stand in for coefficients that
//! would normally come from a hydrodynamic code.
//!
//! A synthetic high-fidelity model adds known cubic restoring and quadratic
//! damping forces to heave and pitch, which gives a reference with exactly
//! known force correction.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector, Matrix6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{simulate, Corrector, FirstOrderSystem, IntegratorConfig, Kinematics};
use crate::trajectory::Trajectory;
use crate::wave::{encounter_frequency, WaveRealization, GRAVITY};

pub const SURGE: usize = 0;
pub const SWAY: usize = 1;
pub const HEAVE: usize = 2;
pub const ROLL: usize = 3;
pub const PITCH: usize = 4;
pub const YAW: usize = 5;

pub const DOF_NAMES: [&str; 6] = ["x", "y", "z", "phi", "theta", "psi"];

/// Seconds excluded from ship metrics while the zero-start response settles.
pub const TRANSIENT_CUTOFF: f64 = 50.0;

const KNOT: f64 = 1852.0 / 3600.0;

/// Main particulars. Displacement is in metric tonnes, lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particulars {
    pub lpp: f64,
    pub beam: f64,
    pub draft: f64,
    pub displacement_t: f64,
    pub kxx: f64,
    pub kyy: f64,
    pub kzz: f64,
    pub speed_knots: f64,
    pub heading_deg: f64,
}

impl Particulars {
    /// The fast displacement ship. Roll and yaw radii of gyration are not
    /// published; `kxx = 0.4 B` and `kzz = kyy` are assumed.
    pub fn fds() -> Self {
        Self {
            lpp: 100.0,
            beam: 12.5,
            draft: 3.125,
            displacement_t: 1607.6,
            kxx: 5.0,
            kyy: 25.0,
            kzz: 25.0,
            speed_knots: 35.4,
            heading_deg: 180.0,
        }
    }

    pub fn speed(&self) -> f64 {
        self.speed_knots * KNOT
    }

    pub fn mass_kg(&self) -> f64 {
        self.displacement_t * 1000.0
    }
}

/// Infinite-frequency added mass of the FDS (SI units, rows as published).
pub fn fds_added_mass() -> Matrix6<f64> {
    Matrix6::from_row_slice(&[
        6.9e3, 0.0, 1.2e4, 0.0, 3.3e6, 0.0, //
        0.0, 6.0e6, 0.0, -4.7e5, 0.0, 6.5e6, //
        1.1e4, 0.0, 4.3e6, 0.0, 3.2e7, 0.0, //
        0.0, -4.4e5, 0.0, 7.7e6, 0.0, 3.6e7, //
        3.3e6, 0.0, 3.2e7, 0.0, 2.2e9, 0.0, //
        0.0, 6.5e6, 0.0, 3.6e7, 0.0, 4.3e8, //
    ])
}

/// Hydrostatic stiffness of the FDS.
pub fn fds_stiffness() -> Matrix6<f64> {
    let mut c = Matrix6::zeros();
    c[(HEAVE, HEAVE)] = 1.01e7;
    c[(HEAVE, PITCH)] = 3.65e7;
    c[(PITCH, HEAVE)] = 3.65e7;
    c[(ROLL, ROLL)] = 4.49e7;
    c[(PITCH, PITCH)] = 6.25e9;
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselModel {
    pub particulars: Particulars,
    pub mass: Matrix6<f64>,
    pub added_mass: Matrix6<f64>,
    pub damping: Matrix6<f64>,
    pub stiffness: Matrix6<f64>,
    /// Fraction of critical damping used to fill `damping`.
    pub damping_fraction: f64,
}

impl VesselModel {
    pub fn speed(&self) -> f64 {
        self.particulars.speed()
    }

    pub fn total_inertia(&self) -> Matrix6<f64> {
        self.mass + self.added_mass
    }

    /// Uncoupled natural frequency `sqrt(C_ii / (M_ii + A_ii))`.
    pub fn natural_frequency(&self, dof: usize) -> f64 {
        (self.stiffness[(dof, dof)] / self.total_inertia()[(dof, dof)]).sqrt()
    }
}

/// FDS matrices with damping at `alpha` of critical on heave, roll and pitch.
pub fn assemble_vessel(particulars: &Particulars, alpha: f64) -> Result<VesselModel> {
    assemble_vessel_with(particulars, fds_added_mass(), fds_stiffness(), alpha)
}

/// Builds a model from externally supplied added-mass and stiffness matrices.
pub fn assemble_vessel_with(
    particulars: &Particulars,
    added_mass: Matrix6<f64>,
    stiffness: Matrix6<f64>,
    alpha: f64,
) -> Result<VesselModel> {
    let p = particulars;
    if !(p.displacement_t > 0.0) {
        return Err(Error::Config(format!("displacement must be > 0, got {}", p.displacement_t)));
    }
    for (name, k) in [("kxx", p.kxx), ("kyy", p.kyy), ("kzz", p.kzz)] {
        if !(k > 0.0) {
            return Err(Error::Config(format!("{name} must be > 0, got {k}")));
        }
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Config(format!("damping fraction must be >= 0, got {alpha}")));
    }
    if !added_mass.iter().chain(stiffness.iter()).all(|x| x.is_finite()) {
        return Err(Error::Config("added-mass and stiffness matrices must be finite".into()));
    }
    let m = p.mass_kg();
    let mass = Matrix6::from_diagonal(&nalgebra::Vector6::new(
        m,
        m,
        m,
        m * p.kxx * p.kxx,
        m * p.kyy * p.kyy,
        m * p.kzz * p.kzz,
    ));
    let mut damping = Matrix6::zeros();
    if alpha > 0.0 {
        for i in [HEAVE, ROLL, PITCH] {
            let c = stiffness[(i, i)];
            if !(c > 0.0) {
                return Err(Error::Config(format!(
                    "damped DOF {} has non-positive stiffness {c}",
                    DOF_NAMES[i]
                )));
            }
            let inertia = mass[(i, i)] + added_mass[(i, i)];
            damping[(i, i)] = alpha * 2.0 * (c * inertia).sqrt();
        }
    }
    Ok(VesselModel {
        particulars: *p,
        mass,
        added_mass,
        damping,
        stiffness,
        damping_fraction: alpha,
    })
}

/// Vessel definition file: particulars plus raw matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselDefinition {
    pub particulars: Particulars,
    pub damping_fraction: f64,
    pub added_mass: [[f64; 6]; 6],
    pub stiffness: [[f64; 6]; 6],
}

fn rows_of(m: &Matrix6<f64>) -> [[f64; 6]; 6] {
    let mut out = [[0.0; 6]; 6];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = m[(i, j)];
        }
    }
    out
}

fn matrix_of(rows: &[[f64; 6]; 6]) -> Matrix6<f64> {
    Matrix6::from_fn(|i, j| rows[i][j])
}

impl VesselDefinition {
    pub fn fds() -> Self {
        Self {
            particulars: Particulars::fds(),
            damping_fraction: 0.1,
            added_mass: rows_of(&fds_added_mass()),
            stiffness: rows_of(&fds_stiffness()),
        }
    }

    pub fn assemble(&self) -> Result<VesselModel> {
        assemble_vessel_with(
            &self.particulars,
            matrix_of(&self.added_mass),
            matrix_of(&self.stiffness),
            self.damping_fraction,
        )
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Reads a 6x6 matrix from plain CSV: six rows of six numbers. Blank lines
/// and lines starting with `#` are skipped.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<Matrix6<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = record.iter().map(|f| f.parse::<f64>()).collect();
        let row = row.map_err(|e| Error::Data(format!("matrix CSV row {}: {e}", rows.len() + 1)))?;
        if row.len() != 6 {
            return Err(Error::Data(format!(
                "matrix CSV row {} has {} entries, expected 6",
                rows.len() + 1,
                row.len()
            )));
        }
        rows.push(row);
    }
    if rows.len() != 6 {
        return Err(Error::Data(format!("matrix CSV has {} rows, expected 6", rows.len())));
    }
    Ok(Matrix6::from_fn(|i, j| rows[i][j]))
}

/// Complex transfer coefficient tabulated against encounter frequency.
/// The force per unit wave amplitude is `amplitude cos(w_e t + phi + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferCurve {
    pub omega_e: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
}

impl TransferCurve {
    pub fn validate(&self) -> Result<()> {
        let n = self.omega_e.len();
        if n == 0 || self.amplitude.len() != n || self.phase.len() != n {
            return Err(Error::Config("transfer curve needs equal-length, non-empty columns".into()));
        }
        if self.omega_e.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("transfer curve frequencies must be strictly increasing".into()));
        }
        if !self.amplitude.iter().chain(&self.phase).all(|x| x.is_finite()) {
            return Err(Error::Config("transfer curve has non-finite entries".into()));
        }
        Ok(())
    }

    /// Linear interpolation of the complex coefficient; held constant beyond
    /// the tabulated range.
    pub fn eval(&self, omega_e: f64) -> Complex<f64> {
        let node = |i: usize| Complex::from_polar(self.amplitude[i], self.phase[i]);
        let w = &self.omega_e;
        let last = w.len() - 1;
        if omega_e <= w[0] {
            return node(0);
        }
        if omega_e >= w[last] {
            return node(last);
        }
        let i = w.partition_point(|&x| x <= omega_e) - 1;
        let s = (omega_e - w[i]) / (w[i + 1] - w[i]);
        node(i) * (1.0 - s) + node(i + 1) * s
    }
}

/// Linear head-seas excitation: heave force and pitch moment per unit wave
/// amplitude. Surge, sway, roll and yaw receive no wave force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitationModel {
    pub speed: f64,
    pub heave: TransferCurve,
    pub pitch: TransferCurve,
}

impl ExcitationModel {
    /// Froude-Krylov force on a box hull of the vessel's length and draft,
    /// with waterplane stiffness `C33`. For head seas with elevation
    /// `zeta cos(w_e t + k x + phi)` along the hull,
    ///
    /// ```text
    /// F3 = -C33 e^{-kT} sinc(k L/2) zeta cos(w_e t + phi)
    /// M5 = -(C33/L) e^{-kT} 2 [sin(ka)/k^2 - a cos(ka)/k] zeta sin(w_e t + phi),  a = L/2
    /// ```
    pub fn box_hull(model: &VesselModel) -> Self {
        let p = &model.particulars;
        let u = p.speed();
        let c33 = model.stiffness[(HEAVE, HEAVE)];
        let (l, draft) = (p.lpp, p.draft);
        let a = 0.5 * l;
        let n = 400;
        let (w_lo, w_hi): (f64, f64) = (0.02, 10.0);
        let mut heave = TransferCurve { omega_e: Vec::with_capacity(n), amplitude: Vec::new(), phase: Vec::new() };
        let mut pitch = heave.clone();
        for i in 0..n {
            // log spacing in wave frequency resolves the long-wave end
            let omega = w_lo * (w_hi / w_lo).powf(i as f64 / (n - 1) as f64);
            let k = omega * omega / GRAVITY;
            let decay = (-k * draft).exp();
            let ka = k * a;
            let sinc = if ka.abs() < 1e-8 { 1.0 } else { ka.sin() / ka };
            let lever = (ka.sin() - ka * ka.cos()) / (k * k);
            let f3 = -c33 * decay * sinc;
            // -sin(x) = cos(x + pi/2)
            let m5 = c33 / l * decay * 2.0 * lever;
            let we = encounter_frequency(omega, u);
            heave.omega_e.push(we);
            heave.amplitude.push(f3.abs());
            heave.phase.push(if f3 < 0.0 { PI } else { 0.0 });
            pitch.omega_e.push(we);
            pitch.amplitude.push(m5.abs());
            pitch.phase.push(if m5 >= 0.0 { PI / 2.0 } else { -PI / 2.0 });
        }
        Self { speed: u, heave, pitch }
    }

    pub fn validate(&self) -> Result<()> {
        self.heave.validate()?;
        self.pitch.validate()?;
        if !(self.speed >= 0.0) || !self.speed.is_finite() {
            return Err(Error::Config(format!("speed must be >= 0, got {}", self.speed)));
        }
        Ok(())
    }

    /// Per-component coefficients for a realization, so that repeated force
    /// evaluations only sum cosines.
    pub fn bind(&self, waves: &WaveRealization) -> BoundExcitation {
        let terms = waves
            .components
            .iter()
            .map(|c| {
                let we = encounter_frequency(c.omega, self.speed);
                let h = self.heave.eval(we) * c.zeta;
                let p = self.pitch.eval(we) * c.zeta;
                BoundTerm { omega_e: we, phi: c.phi, heave: (h.norm(), h.arg()), pitch: (p.norm(), p.arg()) }
            })
            .collect();
        BoundExcitation { terms }
    }
}

#[derive(Debug, Clone, Copy)]
struct BoundTerm {
    omega_e: f64,
    phi: f64,
    heave: (f64, f64),
    pitch: (f64, f64),
}

/// Excitation precomputed for one wave realization.
#[derive(Debug, Clone)]
pub struct BoundExcitation {
    terms: Vec<BoundTerm>,
}

impl BoundExcitation {
    pub fn force(&self, t: f64) -> [f64; 6] {
        let mut f = [0.0; 6];
        for term in &self.terms {
            let arg = term.omega_e * t + term.phi;
            f[HEAVE] += term.heave.0 * (arg + term.heave.1).cos();
            f[PITCH] += term.pitch.0 * (arg + term.pitch.1).cos();
        }
        f
    }
}

/// Linear wave force and moment vector at time `t`.
pub fn wave_excitation(model: &ExcitationModel, waves: &WaveRealization, t: f64) -> [f64; 6] {
    model.bind(waves).force(t)
}

/// Known nonlinear forces of the synthetic reference model:
/// `F3 += -g3 z^3 - d3 |w| w`, `M5 += -g5 theta^3 - d5 |q| q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleNonlinearity {
    pub heave_cubic: f64,
    pub pitch_cubic: f64,
    pub heave_quadratic_damping: f64,
    pub pitch_quadratic_damping: f64,
}

impl OracleNonlinearity {
    pub fn none() -> Self {
        Self { heave_cubic: 0.0, pitch_cubic: 0.0, heave_quadratic_damping: 0.0, pitch_quadratic_damping: 0.0 }
    }

    /// Gains at which each nonlinear term reaches `fraction` of the matching
    /// linear term at twice the given standard deviations.
    pub fn sized_for(model: &VesselModel, sigma: &ResponseScale, fraction: f64) -> Self {
        let c = &model.stiffness;
        let b = &model.damping;
        let cubic = |cii: f64, s: f64| fraction * cii / (2.0 * s).powi(2);
        let quad = |bii: f64, s: f64| fraction * bii / (2.0 * s);
        Self {
            heave_cubic: cubic(c[(HEAVE, HEAVE)], sigma.heave),
            pitch_cubic: cubic(c[(PITCH, PITCH)], sigma.pitch),
            heave_quadratic_damping: quad(b[(HEAVE, HEAVE)], sigma.heave_velocity),
            pitch_quadratic_damping: quad(b[(PITCH, PITCH)], sigma.pitch_velocity),
        }
    }

    /// Default gains for the FDS: 10% of the linear terms at 2 sigma of the
    /// linear response in Hs = 4 m, Tp = 8.5 s head seas.
    pub fn fds_default(model: &VesselModel) -> Self {
        Self::sized_for(model, &ResponseScale::FDS_HS4_TP85, 0.1)
    }

    pub fn validate(&self) -> Result<()> {
        let g = [self.heave_cubic, self.pitch_cubic, self.heave_quadratic_damping, self.pitch_quadratic_damping];
        if !g.iter().all(|x| x.is_finite()) {
            return Err(Error::Config("oracle nonlinearity gains must be finite".into()));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::none()
    }

    pub fn force(&self, pos: &[f64], vel: &[f64]) -> [f64; 6] {
        let mut f = [0.0; 6];
        let (z, th, w, q) = (pos[HEAVE], pos[PITCH], vel[HEAVE], vel[PITCH]);
        f[HEAVE] = -self.heave_cubic * z * z * z - self.heave_quadratic_damping * w.abs() * w;
        f[PITCH] = -self.pitch_cubic * th * th * th - self.pitch_quadratic_damping * q.abs() * q;
        f
    }
}

/// Standard deviations of the heave/pitch response used to size gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseScale {
    pub heave: f64,
    pub pitch: f64,
    pub heave_velocity: f64,
    pub pitch_velocity: f64,
}

impl ResponseScale {
    /// Linear FDS response, Hs = 4 m, Tp = 8.5 s, averaged over three
    /// 600 s realizations after the transient (see [`response_scale`]).
    pub const FDS_HS4_TP85: ResponseScale = ResponseScale {
        heave: 2.58,
        pitch: 0.0623,
        heave_velocity: 3.03,
        pitch_velocity: 0.0934,
    };
}

/// Standard deviations of the heave/pitch channels of a trajectory after its
/// transient cutoff.
pub fn response_scale(traj: &Trajectory) -> Result<ResponseScale> {
    let std = |x: &[f64]| {
        let n = x.len().max(1) as f64;
        let mean = x.iter().sum::<f64>() / n;
        (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    };
    use crate::trajectory::Channel::{Position, Velocity};
    let cut = traj.transient_cutoff;
    Ok(ResponseScale {
        heave: std(traj.window(Position(HEAVE), cut)?),
        pitch: std(traj.window(Position(PITCH), cut)?),
        heave_velocity: std(traj.window(Velocity(HEAVE), cut)?),
        pitch_velocity: std(traj.window(Velocity(PITCH), cut)?),
    })
}

fn check_head_seas(model: &VesselModel) -> Result<()> {
    if (model.particulars.heading_deg - 180.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "only head seas (180 deg) are supported, got {}",
            model.particulars.heading_deg
        )));
    }
    Ok(())
}

fn dmat(m: &Matrix6<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(6, 6, m.as_slice())
}

/// Ship-fixed first-order system in head seas with the surge velocity held
/// fixed. With `oracle`, the known nonlinear forces are included.
pub fn vessel_system(
    model: &VesselModel,
    excitation: &ExcitationModel,
    waves: &WaveRealization,
    oracle: Option<&OracleNonlinearity>,
) -> Result<FirstOrderSystem> {
    check_head_seas(model)?;
    excitation.validate()?;
    let names = DOF_NAMES.iter().map(|s| s.to_string()).collect();
    let mut sys = FirstOrderSystem::new(
        names,
        dmat(&model.total_inertia()),
        dmat(&model.damping),
        dmat(&model.stiffness),
        Kinematics::ShipFixed,
    )?
    .with_fixed_velocity(&[SURGE])?;
    let bound = Arc::new(excitation.bind(waves));
    sys = sys.with_excitation(Arc::new(move |t| DVector::from_column_slice(&bound.force(t))));
    let eta_waves = Arc::new(waves.clone());
    let speed = excitation.speed;
    sys = sys.with_elevation(Arc::new(move |t| eta_waves.encountered_elevation(t, speed)));
    if let Some(nl) = oracle {
        nl.validate()?;
        if !nl.is_zero() {
            let nl = *nl;
            sys = sys.with_nonlinear(Arc::new(move |_t, pos, vel| DVector::from_column_slice(&nl.force(pos, vel))));
        }
    }
    Ok(sys)
}

/// Rest state advancing at the service speed.
pub fn initial_state(model: &VesselModel) -> DVector<f64> {
    let mut v = DVector::zeros(12);
    v[6 + SURGE] = model.speed();
    v
}

fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(duration >= dt) {
        return Err(Error::Config(format!("need duration >= dt > 0, got {duration} and {dt}")));
    }
    Ok((duration / dt).round() as usize)
}

/// Reference response of the linear model plus the known nonlinear forces.
pub fn synthetic_high_fidelity(
    model: &VesselModel,
    excitation: &ExcitationModel,
    waves: &WaveRealization,
    nonlinearity: &OracleNonlinearity,
    duration: f64,
    dt: f64,
) -> Result<Trajectory> {
    let sys = vessel_system(model, excitation, waves, Some(nonlinearity))?;
    let mut traj = simulate(&sys, &initial_state(model), 0.0, step_count(duration, dt)?, &IntegratorConfig::new(dt), None)?;
    traj.transient_cutoff = TRANSIENT_CUTOFF;
    Ok(traj)
}

/// Linear model response, corrected when a corrector is supplied.
pub fn predict(
    model: &VesselModel,
    excitation: &ExcitationModel,
    waves: &WaveRealization,
    duration: f64,
    dt: f64,
    corrector: Option<&mut dyn Corrector>,
) -> Result<Trajectory> {
    let sys = vessel_system(model, excitation, waves, None)?;
    let mut traj = simulate(&sys, &initial_state(model), 0.0, step_count(duration, dt)?, &IntegratorConfig::new(dt), corrector)?;
    traj.transient_cutoff = TRANSIENT_CUTOFF;
    Ok(traj)
}

/// `delta = (M + A) u' - f_low` for every sample of a 6-DOF trajectory.
/// The surge row carries the constraint force and is reported as zero.
pub fn extract_delta(
    model: &VesselModel,
    excitation: &ExcitationModel,
    traj: &Trajectory,
    waves: &WaveRealization,
) -> Result<Vec<Vec<f64>>> {
    if traj.ndof() != 6 {
        return Err(Error::Data(format!("ship extraction needs a 6-DOF trajectory, got {} DOF", traj.ndof())));
    }
    let sys = vessel_system(model, excitation, waves, None)?;
    let inertia = model.total_inertia();
    let mut out: Vec<Vec<f64>> = (0..6).map(|_| Vec::with_capacity(traj.len())).collect();
    let (mut pos, mut vel, mut acc) = ([0.0; 6], [0.0; 6], nalgebra::Vector6::zeros());
    for n in 0..traj.len() {
        for d in 0..6 {
            pos[d] = traj.positions[d][n];
            vel[d] = traj.velocities[d][n];
            acc[d] = traj.accelerations[d][n];
        }
        let t = traj.time(n);
        let f_low = sys.net_force(t, &sys.external_force(t), &pos, &vel, None);
        let m_acc = inertia * acc;
        for d in 0..6 {
            out[d].push(if d == SURGE { 0.0 } else { m_acc[d] - f_low[d] });
        }
    }
    Ok(out)
}
