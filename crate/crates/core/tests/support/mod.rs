pub mod instances;
pub mod oracle;
pub mod properties;
pub mod tracking;
