//! dBm and linear (mW) conversions. Only configuration boundaries use dBm.

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        assert_eq!(dbm_to_mw(0.0), 1.0);
        assert!((dbm_to_mw(30.0) - 1000.0).abs() < 1e-9);
        assert!((dbm_to_mw(27.78) - 599.79).abs() < 0.01);
        assert!((dbm_to_mw(29.54) - 899.50).abs() < 0.01);
    }

    #[test]
    fn round_trip() {
        for &x in &[-40.0, -3.3, 0.0, 20.0, 27.78, 29.54, 30.0, 47.0] {
            assert!((mw_to_dbm(dbm_to_mw(x)) - x).abs() < 1e-12);
        }
    }
}
