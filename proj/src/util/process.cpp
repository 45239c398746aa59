#include "nbrepro/util/process.hpp"

#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <poll.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace nbrepro::util {

namespace {

using Clock = std::chrono::steady_clock;

// Only async-signal-safe calls between fork and exec; everything is prepared by the parent.
[[noreturn]] void child_exec(char* const* argv, char* const* envp, const char* working_dir, int out_fd,
                             int err_report_fd) {
    setpgid(0, 0);
    int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) {
        dup2(devnull, STDIN_FILENO);
        close(devnull);
    }
    dup2(out_fd, STDOUT_FILENO);
    dup2(out_fd, STDERR_FILENO);
    close(out_fd);

    if (working_dir && chdir(working_dir) != 0) {
        int err = errno;
        (void)!write(err_report_fd, &err, sizeof err);
        _exit(127);
    }
    execvpe(argv[0], argv, envp);

    int err = errno;
    (void)!write(err_report_fd, &err, sizeof err);
    _exit(127);
}

std::vector<std::string> child_environment(const ProcessOptions& options) {
    std::vector<std::string> env;
    for (char** e = environ; e && *e; ++e) {
        std::string_view entry(*e);
        auto key = entry.substr(0, entry.find('='));
        bool overridden = false;
        for (const auto& kv : options.extra_env) overridden = overridden || kv.first == key;
        if (!overridden) env.emplace_back(entry);
    }
    for (const auto& [k, v] : options.extra_env) env.push_back(k + "=" + v);
    return env;
}

} // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options) {
    ProcessResult result;
    if (argv.empty()) {
        result.launch_failed = true;
        result.output = "empty command line";
        return result;
    }

    int out_pipe[2];
    int err_pipe[2];
    if (pipe2(out_pipe, O_CLOEXEC) != 0) {
        result.launch_failed = true;
        result.output = std::strerror(errno);
        return result;
    }
    if (pipe2(err_pipe, O_CLOEXEC) != 0) {
        close(out_pipe[0]);
        close(out_pipe[1]);
        result.launch_failed = true;
        result.output = std::strerror(errno);
        return result;
    }

    std::ofstream log;
    if (options.log_file) {
        std::filesystem::create_directories(options.log_file->parent_path());
        log.open(*options.log_file, std::ios::binary | std::ios::app);
    }

    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    const auto env_strings = child_environment(options);
    std::vector<char*> envp;
    for (const auto& e : env_strings) envp.push_back(const_cast<char*>(e.c_str()));
    envp.push_back(nullptr);
    const std::string working_dir = options.working_dir ? options.working_dir->string() : std::string();

    const auto start = Clock::now();
    pid_t pid = fork();
    if (pid < 0) {
        for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) close(fd);
        result.launch_failed = true;
        result.output = std::strerror(errno);
        return result;
    }
    if (pid == 0) {
        close(out_pipe[0]);
        close(err_pipe[0]);
        child_exec(args.data(), envp.data(), options.working_dir ? working_dir.c_str() : nullptr, out_pipe[1], err_pipe[1]);
    }

    close(out_pipe[1]);
    close(err_pipe[1]);

    int exec_errno = 0;
    bool exec_failed = read(err_pipe[0], &exec_errno, sizeof exec_errno) == sizeof exec_errno;
    close(err_pipe[0]);

    const bool bounded = options.timeout.count() > 0;
    const auto deadline = start + options.timeout;
    char buffer[8192];
    pollfd pfd{out_pipe[0], POLLIN, 0};
    for (;;) {
        int wait_ms = -1;
        if (bounded) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
            if (left.count() <= 0) {
                result.timed_out = true;
                break;
            }
            wait_ms = static_cast<int>(std::min<long long>(left.count(), 1000));
        }
        int rc = poll(&pfd, 1, wait_ms);
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (rc == 0) continue;
        ssize_t n = read(out_pipe[0], buffer, sizeof buffer);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        result.output.append(buffer, static_cast<std::size_t>(n));
        if (log.is_open()) log.write(buffer, n).flush();
    }
    close(out_pipe[0]);

    if (result.timed_out) kill(-pid, SIGKILL);

    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    result.elapsed_s = std::chrono::duration<double>(Clock::now() - start).count();

    if (exec_failed) {
        result.launch_failed = true;
        result.output += std::string("failed to launch ") + argv[0] + ": " + std::strerror(exec_errno);
        return result;
    }
    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    return result;
}

bool executable_on_path(const std::string& name) {
    if (name.find('/') != std::string::npos) return access(name.c_str(), X_OK) == 0;
    const char* path = std::getenv("PATH");
    if (!path) return false;
    std::string_view rest(path);
    while (!rest.empty()) {
        auto colon = rest.find(':');
        auto dir = rest.substr(0, colon);
        auto candidate = std::filesystem::path(std::string(dir.empty() ? "." : dir)) / name;
        if (access(candidate.c_str(), X_OK) == 0) return true;
        if (colon == std::string_view::npos) break;
        rest.remove_prefix(colon + 1);
    }
    return false;
}

} // namespace nbrepro::util
