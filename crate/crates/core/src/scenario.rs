//! Random network realizations: BS/user drops and the channel tensor.
//!
//! Large-scale gain follows a two-state (LOS/NLOS) log-distance model with
//! log-normal shadowing. Shadowing and the LOS state are drawn once per
//! (user, BS) pair; small-scale fading is drawn independently per band.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Distances below this are clamped before taking `log10`.
pub const MIN_PATHLOSS_DISTANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Euclidean distance.
#[inline]
pub fn distance(p: Point, q: Point) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallScale {
    /// Unit-power circularly-symmetric complex Gaussian per band.
    Rayleigh,
    /// No small-scale fading; `h` is the real square root of the large-scale gain.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub pathloss_intercept_los: f64,
    pub pathloss_exponent_los: f64,
    pub pathloss_intercept_nlos: f64,
    pub pathloss_exponent_nlos: f64,
    pub shadowing_sigma_los: f64,
    pub shadowing_sigma_nlos: f64,
    /// LOS probability is `exp(-los_decay * d)`.
    pub los_decay: f64,
    pub small_scale: SmallScale,
}

impl Default for ChannelParams {
    /// Published 28 GHz urban-microcell fits.
    fn default() -> Self {
        Self {
            pathloss_intercept_los: 61.4,
            pathloss_exponent_los: 2.0,
            pathloss_intercept_nlos: 72.0,
            pathloss_exponent_nlos: 2.92,
            shadowing_sigma_los: 5.8,
            shadowing_sigma_nlos: 8.7,
            los_decay: 1.0 / 67.1,
            small_scale: SmallScale::Rayleigh,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.pathloss_intercept_los,
            self.pathloss_exponent_los,
            self.pathloss_intercept_nlos,
            self.pathloss_exponent_nlos,
            self.shadowing_sigma_los,
            self.shadowing_sigma_nlos,
            self.los_decay,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig("channel parameters must be finite".into()));
        }
        if self.shadowing_sigma_los < 0.0 || self.shadowing_sigma_nlos < 0.0 {
            return Err(Error::InvalidConfig("shadowing sigmas must be >= 0".into()));
        }
        if self.los_decay < 0.0 {
            return Err(Error::InvalidConfig("los_decay must be >= 0".into()));
        }
        if !(self.pathloss_exponent_los > 0.0 && self.pathloss_exponent_nlos > 0.0) {
            return Err(Error::InvalidConfig("path-loss exponents must be > 0".into()));
        }
        Ok(())
    }

    /// Deterministic path loss in dB (no shadowing) at distance `d` meters.
    pub fn path_loss_db(&self, d: f64, los: bool) -> f64 {
        let d = d.max(MIN_PATHLOSS_DISTANCE);
        let (intercept, exponent) = if los {
            (self.pathloss_intercept_los, self.pathloss_exponent_los)
        } else {
            (self.pathloss_intercept_nlos, self.pathloss_exponent_nlos)
        };
        intercept + 10.0 * exponent * d.log10()
    }

    pub fn los_probability(&self, d: f64) -> f64 {
        (-self.los_decay * d).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub num_bs: usize,
    pub num_users: usize,
    /// Side of the square deployment area, meters.
    pub side_length: f64,
    pub num_bands: usize,
    /// Hz, split evenly over `num_bands`.
    pub total_bandwidth: f64,
    /// Hz. Informational: the path-loss fits are already frequency specific.
    pub carrier_freq: f64,
    /// dBm/Hz.
    pub noise_psd: f64,
    /// Per-user power budget, dBm.
    pub user_power_budget: f64,
    pub channel_params: ChannelParams,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_bs: 20,
            num_users: 200,
            side_length: 400.0,
            num_bands: 24,
            total_bandwidth: 5e6,
            carrier_freq: 28e9,
            noise_psd: -174.0,
            user_power_budget: 23.0,
            channel_params: ChannelParams::default(),
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_bs == 0 {
            return Err(Error::InvalidConfig("num_bs must be >= 1".into()));
        }
        if self.num_bands == 0 {
            return Err(Error::InvalidConfig("num_bands must be >= 1".into()));
        }
        if !(self.side_length > 0.0 && self.side_length.is_finite()) {
            return Err(Error::InvalidConfig("side_length must be > 0".into()));
        }
        if !(self.total_bandwidth > 0.0 && self.total_bandwidth.is_finite()) {
            return Err(Error::InvalidConfig("total_bandwidth must be > 0".into()));
        }
        if !(self.band_width() > 0.0) {
            return Err(Error::InvalidConfig("per-band width must be > 0".into()));
        }
        if !self.noise_psd.is_finite() || !self.user_power_budget.is_finite() {
            return Err(Error::InvalidConfig("noise_psd and user_power_budget must be finite".into()));
        }
        self.channel_params.validate()
    }

    /// Width of one band, `W`.
    pub fn band_width(&self) -> f64 {
        self.total_bandwidth / self.num_bands as f64
    }

    /// White-noise power per band in watts.
    pub fn noise_power_per_band(&self) -> f64 {
        noise_power_watts(self.noise_psd, self.band_width())
    }

    pub fn user_power_budget_watts(&self) -> f64 {
        dbm_to_watts(self.user_power_budget)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Noise power over `bandwidth` Hz for a PSD given in dBm/Hz.
pub fn noise_power_watts(psd_dbm_per_hz: f64, bandwidth: f64) -> f64 {
    dbm_to_watts(psd_dbm_per_hz) * bandwidth
}

/// Complex channel coefficients `h[u][b][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    num_users: usize,
    num_bs: usize,
    num_bands: usize,
    // stored [user][band][bs] so per-(user, band) BS vectors are contiguous
    data: Vec<Complex64>,
}

impl ChannelTensor {
    pub fn zeros(num_users: usize, num_bs: usize, num_bands: usize) -> Self {
        Self {
            num_users,
            num_bs,
            num_bands,
            data: vec![Complex64::new(0.0, 0.0); num_users * num_bs * num_bands],
        }
    }

    pub fn from_fn(
        num_users: usize,
        num_bs: usize,
        num_bands: usize,
        mut f: impl FnMut(usize, usize, usize) -> Complex64,
    ) -> Self {
        let mut t = Self::zeros(num_users, num_bs, num_bands);
        for u in 0..num_users {
            for b in 0..num_bs {
                for k in 0..num_bands {
                    t.set(u, b, k, f(u, b, k));
                }
            }
        }
        t
    }

    /// `(num_users, num_bs, num_bands)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.num_users, self.num_bs, self.num_bands)
    }

    #[inline]
    fn offset(&self, user: usize, bs: usize, band: usize) -> usize {
        debug_assert!(user < self.num_users && bs < self.num_bs && band < self.num_bands);
        (user * self.num_bands + band) * self.num_bs + bs
    }

    #[inline]
    pub fn get(&self, user: usize, bs: usize, band: usize) -> Complex64 {
        self.data[self.offset(user, bs, band)]
    }

    pub fn set(&mut self, user: usize, bs: usize, band: usize, value: Complex64) {
        let i = self.offset(user, bs, band);
        self.data[i] = value;
    }

    /// Coefficients from `user` to every BS on `band`.
    #[inline]
    pub fn bs_vector(&self, user: usize, band: usize) -> &[Complex64] {
        let start = (user * self.num_bands + band) * self.num_bs;
        &self.data[start..start + self.num_bs]
    }

    /// Coefficients from `user` on `band` gathered over the BS index list `bss`.
    pub fn gather(&self, user: usize, band: usize, bss: &[usize]) -> Vec<Complex64> {
        let row = self.bs_vector(user, band);
        bss.iter().map(|&b| row[b]).collect()
    }
}

/// One Monte Carlo draw of the network.
#[derive(Debug, Clone)]
pub struct NetworkRealization {
    pub bs_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    pub channel: ChannelTensor,
    /// `sigma^2`, identical across BSs and bands.
    pub noise_power_per_band: f64,
    /// Band width `W` in Hz.
    pub band_width: f64,
}

impl NetworkRealization {
    /// Assembles a realization from explicit parts, checking shapes.
    pub fn new(
        bs_positions: Vec<Point>,
        user_positions: Vec<Point>,
        channel: ChannelTensor,
        noise_power_per_band: f64,
        band_width: f64,
    ) -> Result<Self> {
        let (nu, nb, nk) = channel.shape();
        if nu != user_positions.len() || nb != bs_positions.len() || nk == 0 {
            return Err(Error::InvalidConfig(format!(
                "channel shape {:?} does not match {} users / {} BSs",
                channel.shape(),
                user_positions.len(),
                bs_positions.len()
            )));
        }
        if !(noise_power_per_band > 0.0) || !(band_width > 0.0) {
            return Err(Error::InvalidConfig("noise power and band width must be > 0".into()));
        }
        Ok(Self {
            bs_positions,
            user_positions,
            channel,
            noise_power_per_band,
            band_width,
        })
    }

    pub fn num_bs(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn num_bands(&self) -> usize {
        self.channel.shape().2
    }
}

/// RNG for one realization: the config seed picks the key, the realization
/// index picks an independent stream.
pub fn realization_rng(seed: u64, realization_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization_index);
    rng
}

fn uniform_point(rng: &mut impl Rng, side: f64) -> Point {
    Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side)
}

/// Draws a unit-mean-power fade.
pub fn draw_fade(rng: &mut impl Rng, kind: SmallScale) -> Complex64 {
    match kind {
        SmallScale::None => Complex64::new(1.0, 0.0),
        SmallScale::Rayleigh => {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        }
    }
}

/// Draws a realization. Identical `(config, realization_index)` give identical output.
pub fn generate_realization(
    config: &ScenarioConfig,
    realization_index: u64,
) -> Result<NetworkRealization> {
    config.validate()?;
    let params = &config.channel_params;
    let mut rng = realization_rng(config.seed, realization_index);

    let bs_positions: Vec<Point> = (0..config.num_bs)
        .map(|_| uniform_point(&mut rng, config.side_length))
        .collect();
    let user_positions: Vec<Point> = (0..config.num_users)
        .map(|_| uniform_point(&mut rng, config.side_length))
        .collect();

    let mut channel = ChannelTensor::zeros(config.num_users, config.num_bs, config.num_bands);
    for (u, &up) in user_positions.iter().enumerate() {
        for (b, &bp) in bs_positions.iter().enumerate() {
            let d = distance(up, bp);
            let los = rng.random::<f64>() < params.los_probability(d);
            let sigma = if los {
                params.shadowing_sigma_los
            } else {
                params.shadowing_sigma_nlos
            };
            let shadow: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
            let loss_db = params.path_loss_db(d, los) + shadow;
            let amplitude = 10f64.powf(-loss_db / 20.0);
            for k in 0..config.num_bands {
                let fade = draw_fade(&mut rng, params.small_scale);
                channel.set(u, b, k, fade * amplitude);
            }
        }
    }

    NetworkRealization::new(
        bs_positions,
        user_positions,
        channel,
        config.noise_power_per_band(),
        config.band_width(),
    )
}
