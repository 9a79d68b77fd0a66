//! On-disk persistence: an append-only order log plus one root file per
//! epoch. The order log replays through the normal submission path on open,
//! so disk state can never represent something the in-memory log would have
//! rejected.

use crate::codec::{self, Record};
use crate::keys::demo_signing_key;
use crate::log::Ftl;
use ed25519_dalek::SigningKey;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

pub struct Store {
    dir: PathBuf,
}

impl Store {
    pub fn open(dir: &Path) -> io::Result<Store> {
        fs::create_dir_all(dir.join("roots"))?;
        Ok(Store {
            dir: dir.to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn orders_path(&self) -> PathBuf {
        self.dir.join("orders.log")
    }

    pub fn append(&self, line: &str) -> io::Result<()> {
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.orders_path())?;
        writeln!(f, "{line}")?;
        f.sync_data()
    }

    pub fn order_lines(&self) -> io::Result<Vec<String>> {
        match fs::read_to_string(self.orders_path()) {
            Ok(text) => Ok(text.lines().map(str::to_string).collect()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(e),
        }
    }

    pub fn write_root(&self, epoch: u64, line: &str) -> io::Result<()> {
        let path = self.dir.join("roots").join(format!("epoch-{epoch}.txt"));
        fs::write(path, format!("{line}\n"))
    }

    pub fn read_root(&self, epoch: u64) -> io::Result<Option<String>> {
        let path = self.dir.join("roots").join(format!("epoch-{epoch}.txt"));
        match fs::read_to_string(path) {
            Ok(text) => Ok(Some(text.trim_end().to_string())),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Loads the signing keys for `id`, creating and persisting fresh demo
    /// keys on first use.
    pub fn load_or_create_keys(&self, id: &str, n: usize) -> io::Result<Vec<SigningKey>> {
        let dir = self.dir.join("keys");
        fs::create_dir_all(&dir)?;
        let mut keys = Vec::with_capacity(n);
        for i in 0..n {
            let path = dir.join(format!("authority-{i}.hex"));
            let key = match fs::read_to_string(&path) {
                Ok(text) => {
                    let bytes = hex::decode(text.trim()).map_err(|_| {
                        io::Error::new(io::ErrorKind::InvalidData, "bad key file")
                    })?;
                    let arr: [u8; 32] = bytes.try_into().map_err(|_| {
                        io::Error::new(io::ErrorKind::InvalidData, "bad key length")
                    })?;
                    SigningKey::from_bytes(&arr)
                }
                Err(e) if e.kind() == io::ErrorKind::NotFound => {
                    let key = demo_signing_key(&format!("ftl-demo:{id}:{i}"));
                    fs::write(&path, format!("{}\n", hex::encode(key.to_bytes())))?;
                    key
                }
                Err(e) => return Err(e),
            };
            keys.push(key);
        }
        Ok(keys)
    }

    /// Re-plays the persisted order history into a fresh log.
    pub fn replay(&self, ftl: &mut Ftl) -> io::Result<()> {
        for line in self.order_lines()? {
            let record = codec::parse_record(&line)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
            let applied = match record {
                Record::Publish(o) => ftl.submit_publish(o).map(|_| ()),
                Record::Withdraw(o) => ftl.submit_withdraw(o).map(|_| ()),
                Record::Protest(p) => ftl.submit_protest(p).map(|_| ()),
                Record::Advance { .. } => {
                    ftl.advance_epoch();
                    Ok(())
                }
                Record::Root(_) => Ok(()), // roots are derived, not replayed
            };
            applied.map_err(|e| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("stored order no longer applies: {e}"),
                )
            })?;
        }
        Ok(())
    }
}
