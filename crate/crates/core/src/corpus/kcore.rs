use std::collections::HashMap;

use super::InteractionLog;

/// Iterative k-core: repeatedly drops users, then items, with fewer than `k`
/// interactions until nothing changes. The result is the unique maximal
/// sub-log in which every user and every item has at least `k` interactions.
pub fn apply_kcore(log: &InteractionLog, k: usize) -> InteractionLog {
    assert!(k >= 1, "k-core requires k >= 1");
    let mut current = log.clone();
    loop {
        let before = current.len();
        let users = current.user_counts();
        let keep_users: HashMap<String, ()> = users
            .into_iter()
            .filter(|&(_, n)| n >= k)
            .map(|(u, _)| (u.to_string(), ()))
            .collect();
        current = current.filter(|r| keep_users.contains_key(&r.user));

        let items = current.item_counts();
        let keep_items: HashMap<String, ()> = items
            .into_iter()
            .filter(|&(_, n)| n >= k)
            .map(|(i, _)| (i.to_string(), ()))
            .collect();
        current = current.filter(|r| keep_items.contains_key(&r.item));

        if current.len() == before {
            return current;
        }
    }
}
