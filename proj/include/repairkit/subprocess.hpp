#pragma once

// Subprocess execution with a deadline, combined output capture, and an
// output size cap. Commands run under /bin/sh in their own process group so
// a timeout can kill the whole tree.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "repairkit/errors.hpp"

namespace repairkit {

struct CommandResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string output;  // stdout + stderr interleaved
};

inline CommandResult run_command(
    const std::string& command, const std::string& workdir,
    std::chrono::milliseconds time_limit,
    const std::map<std::string, std::string>& env = {},
    std::size_t output_limit = 1 << 20) {
    int fds[2];
    if (pipe(fds) != 0) throw SandboxSetupFailure("pipe() failed");

    pid_t pid = fork();
    if (pid < 0) {
        close(fds[0]);
        close(fds[1]);
        throw SandboxSetupFailure("fork() failed");
    }
    if (pid == 0) {
        setpgid(0, 0);
        close(fds[0]);
        dup2(fds[1], STDOUT_FILENO);
        dup2(fds[1], STDERR_FILENO);
        close(fds[1]);
        if (!workdir.empty() && chdir(workdir.c_str()) != 0) _exit(127);
        for (const auto& [k, v] : env) setenv(k.c_str(), v.c_str(), 1);
        execl("/bin/sh", "sh", "-c", command.c_str(),
              static_cast<char*>(nullptr));
        _exit(127);
    }

    close(fds[1]);
    CommandResult res;
    auto deadline = std::chrono::steady_clock::now() + time_limit;
    char buf[4096];
    bool open = true;
    while (open) {
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline && !res.timed_out) {
            res.timed_out = true;
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
        }
        int wait_ms = now >= deadline
                          ? 100
                          : static_cast<int>(
                                std::chrono::duration_cast<
                                    std::chrono::milliseconds>(deadline - now)
                                    .count());
        struct pollfd pfd{fds[0], POLLIN, 0};
        int pr = poll(&pfd, 1, wait_ms);
        if (pr > 0) {
            ssize_t n = read(fds[0], buf, sizeof(buf));
            if (n <= 0) {
                open = false;
            } else if (res.output.size() < output_limit) {
                res.output.append(
                    buf, std::min<std::size_t>(static_cast<std::size_t>(n),
                                               output_limit -
                                                   res.output.size()));
            }
        } else if (pr == 0 && res.timed_out) {
            open = false;  // killed and drained
        }
        // pr < 0: retry (EINTR)
    }
    close(fds[0]);

    int status = 0;
    waitpid(pid, &status, 0);
    if (res.timed_out)
        res.exit_code = -1;
    else if (WIFEXITED(status))
        res.exit_code = WEXITSTATUS(status);
    else
        res.exit_code = 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
    return res;
}

}  // namespace repairkit
