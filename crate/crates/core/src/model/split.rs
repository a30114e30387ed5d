use alloc::string::String;
use alloc::vec::Vec;

/// Outcome of a per-user task split.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSplit<T> {
    pub train: Vec<T>,
    pub test: Vec<T>,
    /// Users dropped for having fewer than two tasks.
    pub excluded_users: Vec<String>,
}

/// Per user, items of the first two tasks (in order of first appearance)
/// go to training and the rest to testing.
pub fn split_by_task<T, F>(items: Vec<T>, key: F) -> TaskSplit<T>
where
    F: Fn(&T) -> (&str, &str),
{
    let mut users: Vec<(String, Vec<String>)> = Vec::new();
    for item in &items {
        let (user, task) = key(item);
        let pos = match users.iter().position(|(u, _)| u == user) {
            Some(p) => p,
            None => {
                users.push((user.into(), Vec::new()));
                users.len() - 1
            }
        };
        let tasks = &mut users[pos].1;
        if !tasks.iter().any(|t| t == task) {
            tasks.push(task.into());
        }
    }
    let mut excluded_users: Vec<String> = users
        .iter()
        .filter(|(_, t)| t.len() < 2)
        .map(|(u, _)| u.clone())
        .collect();
    excluded_users.sort();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for item in items {
        let (user, task) = key(&item);
        let tasks = &users.iter().find(|(u, _)| u == user).expect("seen").1;
        if tasks.len() < 2 {
            continue;
        }
        let rank = tasks.iter().position(|t| t == task).expect("seen");
        if rank < 2 {
            train.push(item);
        } else {
            test.push(item);
        }
    }
    TaskSplit {
        train,
        test,
        excluded_users,
    }
}
