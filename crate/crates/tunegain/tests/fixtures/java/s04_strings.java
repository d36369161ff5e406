class Msg {
    String greet(char c) {
        String s = "hello, world";
        char t = 'x';
        if (c == 'x') { s = "bye"; }
        return s + t;
    }
}
