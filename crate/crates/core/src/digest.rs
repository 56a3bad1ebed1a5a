use serde::Serialize;
use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256.
pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of the compact JSON form of a value.
pub fn digest_json<T: Serialize + ?Sized>(value: &T) -> String {
    digest_bytes(&serde_json::to_vec(value).expect("value serializes"))
}
