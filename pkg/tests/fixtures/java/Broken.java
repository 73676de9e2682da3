public class Broken {
    void dangling() {
        if (true) {
    }
